#include "tissuemix/pmap_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace tissuemix::io {

namespace {

constexpr char kMagic[4] = {'T', 'M', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

void write_pmap(const std::filesystem::path& path, const tiling::TileRecord& record) {
    const auto& p = record.prob;
    require(p.channels > 0 && p.height > 0 && p.width > 0 &&
                p.values.size() == static_cast<std::size_t>(p.channels) * p.plane(),
            "probability tensor is malformed");
    require(record.variant.quarter_turns >= 0 && record.variant.quarter_turns <= 3, "quarter_turns must be in 0..3");
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(p.channels));
    put_u32(out, static_cast<std::uint32_t>(p.height));
    put_u32(out, static_cast<std::uint32_t>(p.width));
    put_u32(out, static_cast<std::uint32_t>(record.offset.row));
    put_u32(out, static_cast<std::uint32_t>(record.offset.col));
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(record.scale)));
    out.push_back(static_cast<char>(record.variant.quarter_turns));
    out.push_back(static_cast<char>(record.variant.hflip ? 1 : 0));
    out.append(2, '\0');
    out.reserve(out.size() + p.values.size() * 4);
    for (double v : p.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

tiling::TileRecord read_pmap(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const auto* b = reinterpret_cast<const unsigned char*>(data.data());
    auto bad = [&](const std::string& what) { return IoError(path.string() + ": " + what); };
    if (data.size() < kPmapHeaderSize || std::memcmp(b, kMagic, 4) != 0) throw bad("not a probability tensor file");
    if (get_u32(b + 4) != kVersion) throw bad("unsupported version " + std::to_string(get_u32(b + 4)));
    const auto C = get_u32(b + 8), H = get_u32(b + 12), W = get_u32(b + 16);
    constexpr std::uint32_t kMaxDim = 1u << 16;
    if (C == 0 || H == 0 || W == 0 || C > kMaxDim || H > kMaxDim || W > kMaxDim) throw bad("invalid dimensions");
    const std::uint64_t count = static_cast<std::uint64_t>(C) * H * W;
    if (data.size() != kPmapHeaderSize + count * 4) throw bad("size does not match the header dimensions");

    tiling::TileRecord r;
    r.offset.row = static_cast<std::int32_t>(get_u32(b + 20));
    r.offset.col = static_cast<std::int32_t>(get_u32(b + 24));
    r.scale = std::bit_cast<float>(get_u32(b + 28));
    r.variant.quarter_turns = b[32];
    r.variant.hflip = b[33] != 0;
    if (r.variant.quarter_turns > 3 || b[33] > 1) throw bad("invalid dihedral variant");
    if (!std::isfinite(r.scale) || r.scale <= 0.0) throw bad("invalid scale");
    r.prob = ProbabilityMap(static_cast<int>(C), static_cast<int>(H), static_cast<int>(W));
    for (std::uint64_t i = 0; i < count; ++i) {
        r.prob.values[i] = std::bit_cast<float>(get_u32(b + kPmapHeaderSize + 4 * i));
        if (!std::isfinite(r.prob.values[i])) throw bad("non-finite probability");
    }
    return r;
}

}  // namespace tissuemix::io
