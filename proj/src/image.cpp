#include "tissuemix/image.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace tissuemix {

Image::Image(int h, int w, std::uint8_t fill) : height(h), width(w) {
    require(h > 0 && w > 0, "image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(h) * w * 3, fill);
}

LabelMask::LabelMask(int h, int w, std::uint8_t fill, std::uint8_t bg)
    : height(h), width(w), background(bg) {
    require(h > 0 && w > 0, "mask dimensions must be positive");
    labels.assign(static_cast<std::size_t>(h) * w, fill);
}

void validate(const Image& image) {
    require(image.height > 0 && image.width > 0, "image dimensions must be positive");
    require(image.pixels.size() == image.pixel_count() * 3, "image buffer size does not match dimensions");
}

void validate(const LabelMask& mask) {
    require(mask.height > 0 && mask.width > 0, "mask dimensions must be positive");
    require(mask.labels.size() == mask.pixel_count(), "mask buffer size does not match dimensions");
}

void validate(const LabelMask& mask, int num_classes) {
    validate(mask);
    require(num_classes > 0 && num_classes <= 255, "class count must be in [1, 255]");
    for (auto v : mask.labels) {
        if (v >= num_classes && v != mask.background) {
            fail("mask label " + std::to_string(v) + " is outside [0, " + std::to_string(num_classes) +
                 ") and is not the background index " + std::to_string(mask.background));
        }
    }
}

void validate_aligned(const Image& image, const LabelMask& mask) {
    validate(image);
    validate(mask);
    require(image.height == mask.height && image.width == mask.width,
            "image and mask dimensions differ: " + std::to_string(image.height) + "x" +
                std::to_string(image.width) + " vs " + std::to_string(mask.height) + "x" +
                std::to_string(mask.width));
}

std::vector<std::size_t> class_histogram(const LabelMask& mask, int num_classes) {
    validate(mask, num_classes);
    std::vector<std::size_t> hist(static_cast<std::size_t>(num_classes), 0);
    for (auto v : mask.labels) {
        if (v != mask.background) ++hist[v];
    }
    return hist;
}

std::vector<std::uint8_t> present_labels(const LabelMask& mask) {
    std::array<bool, 256> seen{};
    for (auto v : mask.labels) seen[v] = true;
    std::vector<std::uint8_t> out;
    for (int v = 0; v < 256; ++v) {
        if (seen[v] && v != mask.background) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::uint8_t single_label(const LabelMask& mask) {
    auto labels = present_labels(mask);
    require(labels.size() == 1, "expected a single-labeled mask, found " + std::to_string(labels.size()) +
                                    " non-background classes");
    return labels.front();
}

}  // namespace tissuemix
