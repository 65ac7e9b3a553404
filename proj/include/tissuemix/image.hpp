#pragma once

#include <cstdint>
#include <vector>

#include "tissuemix/error.hpp"

namespace tissuemix {

inline constexpr std::uint8_t kDefaultBackground = 255;

/// Eight-bit interleaved RGB raster.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;  // height * width * 3, row-major

    Image() = default;
    Image(int h, int w, std::uint8_t fill = 0);

    std::uint8_t& at(int r, int c, int ch) {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
    std::uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<std::size_t>(r) * width + c) * 3 + ch];
    }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    bool operator==(const Image&) const = default;
};

/// Per-pixel class indices; `background` marks pixels excluded from classes.
struct LabelMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels;  // height * width, row-major
    std::uint8_t background = kDefaultBackground;

    LabelMask() = default;
    LabelMask(int h, int w, std::uint8_t fill, std::uint8_t bg = kDefaultBackground);

    std::uint8_t& at(int r, int c) { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return labels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }

    bool operator==(const LabelMask&) const = default;
};

/// An image with its aligned mask.
struct LabeledImage {
    Image image;
    LabelMask mask;

    bool operator==(const LabeledImage&) const = default;
};

void validate(const Image& image);
void validate(const LabelMask& mask);
/// Throws unless every label is < num_classes or equal to the background index.
void validate(const LabelMask& mask, int num_classes);
void validate_aligned(const Image& image, const LabelMask& mask);

/// Pixel count per class; background pixels are not counted.
std::vector<std::size_t> class_histogram(const LabelMask& mask, int num_classes);

/// Distinct non-background labels present, ascending.
std::vector<std::uint8_t> present_labels(const LabelMask& mask);

/// The single non-background class of the mask; throws when there is not exactly one.
std::uint8_t single_label(const LabelMask& mask);

}  // namespace tissuemix
