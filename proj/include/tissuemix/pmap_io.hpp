#pragma once

#include <filesystem>

#include "tissuemix/tiling.hpp"

namespace tissuemix::io {

// Probability tensor file, all fields little-endian:
//   "TMPM" | u32 version (1) | u32 C | u32 H | u32 W | i32 row | i32 col |
//   f32 scale | u8 quarter_turns | u8 hflip | u16 reserved (0) |
//   C*H*W f32 values, channel-major then row-major.
inline constexpr std::size_t kPmapHeaderSize = 36;

void write_pmap(const std::filesystem::path& path, const tiling::TileRecord& record);
tiling::TileRecord read_pmap(const std::filesystem::path& path);

}  // namespace tissuemix::io
