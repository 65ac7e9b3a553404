#pragma once

#include <filesystem>

#include "tissuemix/image.hpp"

namespace tissuemix::io {

/// Decodes any PNG to 8-bit RGB.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

/// Reads an index mask: 8-bit grayscale values or palette indices are taken
/// verbatim. With num_classes > 0 every value must be a class index or the
/// background index.
LabelMask read_mask(const std::filesystem::path& path, int num_classes = 0,
                    std::uint8_t background = kDefaultBackground);

/// Single-channel 8-bit PNG holding the label values as-is.
void write_mask(const std::filesystem::path& path, const LabelMask& mask);

/// RGB rendering of a mask for viewing; not meant to be read back.
void write_mask_preview(const std::filesystem::path& path, const LabelMask& mask);

}  // namespace tissuemix::io
