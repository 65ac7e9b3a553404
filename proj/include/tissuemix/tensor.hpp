#pragma once

#include <cstddef>
#include <vector>

#include "tissuemix/error.hpp"

namespace tissuemix {

/// Dense planar C x H x W tensor of reals.
struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;

    Tensor3() = default;
    Tensor3(int c, int h, int w, double fill = 0.0) : channels(c), height(h), width(w) {
        require(c > 0 && h > 0 && w > 0, "tensor dimensions must be positive");
        values.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    std::size_t index(int c, int y, int x) const {
        return static_cast<std::size_t>(c) * plane() + static_cast<std::size_t>(y) * width + x;
    }
    double& at(int c, int y, int x) { return values[index(c, y, x)]; }
    double at(int c, int y, int x) const { return values[index(c, y, x)]; }
    bool same_shape(const Tensor3& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool operator==(const Tensor3&) const = default;
};

/// Per-pixel class probabilities (segmentation output).
struct ProbabilityMap : Tensor3 {
    using Tensor3::Tensor3;
    ProbabilityMap() = default;
    explicit ProbabilityMap(Tensor3 t) : Tensor3(std::move(t)) {}
};

/// Pre-softmax class activations of the classification head.
struct ActivationMap : Tensor3 {
    using Tensor3::Tensor3;
    ActivationMap() = default;
    explicit ActivationMap(Tensor3 t) : Tensor3(std::move(t)) {}
};

/// Image-level classification logits, one per class.
struct ClassLogits {
    std::vector<double> z;
    bool operator==(const ClassLogits&) const = default;
};

/// Multi-hot image-level labels.
struct LabelVector {
    std::vector<bool> present;

    std::size_t size() const { return present.size(); }
    bool operator==(const LabelVector&) const = default;
};

/// Throws unless values are >= 0 and every pixel's channels sum to 1 within `tol`.
void validate_probability_map(const Tensor3& p, double tol = 1e-6);

/// Divides each pixel by its channel sum (pixels summing to 0 become uniform).
void renormalize(Tensor3& p);

}  // namespace tissuemix
