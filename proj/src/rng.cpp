#include "tissuemix/rng.hpp"

#include <limits>

#include "tissuemix/error.hpp"

namespace tissuemix {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
    require(lo <= hi, "uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    // Reject the tail so every residue is equally likely.
    const std::uint64_t limit = (std::numeric_limits<std::uint64_t>::max() / span) * span;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::int64_t>(static_cast<std::uint64_t>(lo) + x % span);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace tissuemix
