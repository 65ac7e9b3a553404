#include "tissuemix/augment.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tissuemix/resample.hpp"

namespace tissuemix {

namespace {

// Resample `in` through an inverse map dst(r, c) -> src(y, x).
template <typename Map>
LabeledImage warp(const LabeledImage& in, Map&& inverse) {
    const int h = in.image.height;
    const int w = in.image.width;
    LabeledImage out{Image(h, w), LabelMask(h, w, in.mask.background, in.mask.background)};
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const auto [y, x] = inverse(static_cast<double>(r), static_cast<double>(c));
            const auto rgb = sample_bilinear_rgb(in.image, y, x);
            for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = rgb[static_cast<std::size_t>(ch)];
            out.mask.at(r, c) = sample_nearest(in.mask, y, x);
        }
    }
    return out;
}

// Exact index remap; dst has the given dims, src(r, c) = map(r, c).
template <typename Map>
LabeledImage remap(const LabeledImage& in, int out_h, int out_w, Map&& map) {
    LabeledImage out{Image(out_h, out_w), LabelMask(out_h, out_w, in.mask.background, in.mask.background)};
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) {
            const auto [sr, sc] = map(r, c);
            for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = in.image.at(sr, sc, ch);
            out.mask.at(r, c) = in.mask.at(sr, sc);
        }
    }
    return out;
}

TransformDescriptor descriptor(std::string op, int source, std::vector<std::pair<std::string, double>> params = {}) {
    return {std::move(op), source, std::move(params)};
}

}  // namespace

AugmentPolicy AugmentPolicy::mosaic_default() {
    AugmentPolicy p;
    p.hflip_prob = 0.5;
    p.vflip_prob = 0.5;
    p.max_shift_frac = 0.1;
    p.scale_min = 0.9;
    p.scale_max = 1.1;
    p.right_angle_rotation = true;
    p.max_rotation_deg = 15.0;
    return p;
}

void AugmentPolicy::validate() const {
    require(hflip_prob >= 0.0 && hflip_prob <= 1.0 && vflip_prob >= 0.0 && vflip_prob <= 1.0,
            "flip probabilities must be in [0, 1]");
    require(max_shift_frac >= 0.0 && max_shift_frac < 1.0, "max_shift_frac must be in [0, 1)");
    require(scale_min > 0.0 && scale_min <= scale_max, "scale range must satisfy 0 < min <= max");
    require(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0, "max_rotation_deg must be in [0, 180]");
    require(crop_height >= 0 && crop_width >= 0 && (crop_height == 0) == (crop_width == 0),
            "crop size must be both zero (disabled) or both positive");
}

LabeledImage flip_horizontal(const LabeledImage& in) {
    const int w = in.image.width;
    return remap(in, in.image.height, w, [w](int r, int c) { return std::pair{r, w - 1 - c}; });
}

LabeledImage flip_vertical(const LabeledImage& in) {
    const int h = in.image.height;
    return remap(in, h, in.image.width, [h](int r, int c) { return std::pair{h - 1 - r, c}; });
}

LabeledImage rotate_quarter_turns(const LabeledImage& in, int quarter_turns) {
    const int k = ((quarter_turns % 4) + 4) % 4;
    const int h = in.image.height;
    const int w = in.image.width;
    switch (k) {
        case 1: return remap(in, w, h, [w](int r, int c) { return std::pair{c, w - 1 - r}; });
        case 2: return remap(in, h, w, [h, w](int r, int c) { return std::pair{h - 1 - r, w - 1 - c}; });
        case 3: return remap(in, w, h, [h](int r, int c) { return std::pair{h - 1 - c, r}; });
        default: return in;
    }
}

LabeledImage shift(const LabeledImage& in, int dy, int dx) {
    const int h = in.image.height;
    const int w = in.image.width;
    return remap(in, h, w, [=](int r, int c) { return std::pair{reflect_index(r - dy, h), reflect_index(c - dx, w)}; });
}

LabeledImage scale_about_center(const LabeledImage& in, double factor) {
    require(factor > 0.0, "scale factor must be positive");
    const double cy = (in.image.height - 1) / 2.0;
    const double cx = (in.image.width - 1) / 2.0;
    return warp(in, [=](double r, double c) { return std::pair{cy + (r - cy) / factor, cx + (c - cx) / factor}; });
}

LabeledImage rotate_about_center(const LabeledImage& in, double degrees) {
    const double th = degrees * std::numbers::pi / 180.0;
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    const double cy = (in.image.height - 1) / 2.0;
    const double cx = (in.image.width - 1) / 2.0;
    return warp(in, [=](double r, double c) {
        const double u = c - cx;
        const double v = r - cy;
        return std::pair{cy + u * sn + v * cs, cx + u * cs - v * sn};
    });
}

Image crop(const Image& in, int row, int col, int height, int width) {
    require(height > 0 && width > 0, "crop size must be positive");
    require(row >= 0 && col >= 0 && row + height <= in.height && col + width <= in.width,
            "crop " + std::to_string(height) + "x" + std::to_string(width) + " at (" + std::to_string(row) + "," +
                std::to_string(col) + ") exceeds image " + std::to_string(in.height) + "x" + std::to_string(in.width));
    Image out(height, width);
    for (int r = 0; r < height; ++r) {
        const auto* src = &in.pixels[(static_cast<std::size_t>(row + r) * in.width + col) * 3];
        std::copy(src, src + static_cast<std::size_t>(width) * 3, &out.pixels[static_cast<std::size_t>(r) * width * 3]);
    }
    return out;
}

LabelMask crop(const LabelMask& in, int row, int col, int height, int width) {
    require(height > 0 && width > 0, "crop size must be positive");
    require(row >= 0 && col >= 0 && row + height <= in.height && col + width <= in.width,
            "crop " + std::to_string(height) + "x" + std::to_string(width) + " at (" + std::to_string(row) + "," +
                std::to_string(col) + ") exceeds mask " + std::to_string(in.height) + "x" + std::to_string(in.width));
    LabelMask out(height, width, in.background, in.background);
    for (int r = 0; r < height; ++r) {
        const auto* src = &in.labels[static_cast<std::size_t>(row + r) * in.width + col];
        std::copy(src, src + width, &out.labels[static_cast<std::size_t>(r) * width]);
    }
    return out;
}

LabeledImage crop(const LabeledImage& in, int row, int col, int height, int width) {
    return {crop(in.image, row, col, height, width), crop(in.mask, row, col, height, width)};
}

LabeledImage apply_transform(const LabeledImage& in, const TransformDescriptor& t) {
    auto i = [&](const char* key) { return static_cast<int>(std::lround(t.param(key))); };
    if (t.op == "hflip") return flip_horizontal(in);
    if (t.op == "vflip") return flip_vertical(in);
    if (t.op == "shift") return shift(in, i("dy"), i("dx"));
    if (t.op == "scale") return scale_about_center(in, t.param("factor"));
    if (t.op == "rot90") return rotate_quarter_turns(in, i("quarter_turns"));
    if (t.op == "rotate") return rotate_about_center(in, t.param("degrees"));
    if (t.op == "crop" || t.op == "tile_crop" || t.op == "quadrant_crop")
        return crop(in, i("row"), i("col"), i("height"), i("width"));
    if (t.op == "resize")
        return {resize_bilinear(in.image, i("height"), i("width")), resize_nearest(in.mask, i("height"), i("width"))};
    fail("unknown transform '" + t.op + "'");
}

Augmented augment(const LabeledImage& input, Rng& rng, const AugmentPolicy& policy, int source) {
    policy.validate();
    validate_aligned(input.image, input.mask);
    Augmented out{input, {}};
    auto& s = out.sample;

    if (policy.hflip_prob > 0.0 && rng.bernoulli(policy.hflip_prob)) {
        s = flip_horizontal(s);
        out.applied.push_back(descriptor("hflip", source));
    }
    if (policy.vflip_prob > 0.0 && rng.bernoulli(policy.vflip_prob)) {
        s = flip_vertical(s);
        out.applied.push_back(descriptor("vflip", source));
    }
    if (policy.max_shift_frac > 0.0) {
        const int my = static_cast<int>(std::lround(policy.max_shift_frac * s.image.height));
        const int mx = static_cast<int>(std::lround(policy.max_shift_frac * s.image.width));
        const int dy = static_cast<int>(rng.uniform_int(-my, my));
        const int dx = static_cast<int>(rng.uniform_int(-mx, mx));
        if (dy != 0 || dx != 0) {
            s = shift(s, dy, dx);
            out.applied.push_back(descriptor("shift", source, {{"dy", dy}, {"dx", dx}}));
        }
    }
    if (policy.scale_min != 1.0 || policy.scale_max != 1.0) {
        const double f = policy.scale_min == policy.scale_max ? policy.scale_min
                                                              : rng.uniform(policy.scale_min, policy.scale_max);
        if (f != 1.0) {
            s = scale_about_center(s, f);
            out.applied.push_back(descriptor("scale", source, {{"factor", f}}));
        }
    }
    if (policy.right_angle_rotation) {
        // Odd quarter turns would transpose non-square inputs.
        const bool square = s.image.height == s.image.width;
        const int k = square ? static_cast<int>(rng.uniform_int(0, 3)) : 2 * static_cast<int>(rng.uniform_int(0, 1));
        if (k != 0) {
            s = rotate_quarter_turns(s, k);
            out.applied.push_back(descriptor("rot90", source, {{"quarter_turns", k}}));
        }
    }
    if (policy.max_rotation_deg > 0.0) {
        const double deg = rng.uniform(-policy.max_rotation_deg, policy.max_rotation_deg);
        if (deg != 0.0) {
            s = rotate_about_center(s, deg);
            out.applied.push_back(descriptor("rotate", source, {{"degrees", deg}}));
        }
    }
    if (policy.crop_height > 0) {
        require(policy.crop_height <= s.image.height && policy.crop_width <= s.image.width,
                "augment: crop " + std::to_string(policy.crop_height) + "x" + std::to_string(policy.crop_width) +
                    " is larger than the transformed image " + std::to_string(s.image.height) + "x" +
                    std::to_string(s.image.width));
        const int row = static_cast<int>(rng.uniform_int(0, s.image.height - policy.crop_height));
        const int col = static_cast<int>(rng.uniform_int(0, s.image.width - policy.crop_width));
        s = crop(s, row, col, policy.crop_height, policy.crop_width);
        out.applied.push_back(descriptor(
            "crop", source, {{"row", row}, {"col", col}, {"height", policy.crop_height}, {"width", policy.crop_width}}));
    }
    return out;
}

}  // namespace tissuemix
