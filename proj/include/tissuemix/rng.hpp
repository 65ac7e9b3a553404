#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace tissuemix {

/// Seeded generator with portable value mappings.
///
/// The engine sequence of std::mt19937_64 is fixed by the standard, but the
/// std distributions are not, so integer and real draws are mapped here.
/// Given the same seed, every draw is bit-identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in the closed range [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename T>
    void shuffle(std::span<T> values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Child seed for stream `index` of `seed`; independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace tissuemix
