#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

#include "tissuemix/image.hpp"
#include "tissuemix/rng.hpp"

namespace fixtures {

// Stain-like base colour per class, loosely H&E.
inline std::array<int, 3> class_color(int label) {
    static constexpr std::array<std::array<int, 3>, 6> colors{{
        {150, 60, 140}, {220, 130, 170}, {90, 40, 120}, {200, 160, 190}, {170, 90, 110}, {120, 80, 160},
    }};
    return colors[static_cast<std::size_t>(label) % colors.size()];
}

// Noisy single-class tile; when `with_background` some white pixels are labeled background.
inline tissuemix::LabeledImage make_tile(tissuemix::Rng& rng, int h, int w, std::uint8_t label,
                                         bool with_background = false, int noise = 25) {
    tissuemix::LabeledImage t{tissuemix::Image(h, w), tissuemix::LabelMask(h, w, label)};
    const auto base = class_color(label);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const bool bg = with_background && rng.bernoulli(0.05);
            for (int ch = 0; ch < 3; ++ch) {
                const int v = bg ? 245 : base[static_cast<std::size_t>(ch)] + static_cast<int>(rng.uniform_int(-noise, noise));
                t.image.at(r, c, ch) = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
            }
            if (bg) t.mask.at(r, c) = t.mask.background;
        }
    }
    return t;
}

inline tissuemix::Image random_image(tissuemix::Rng& rng, int h, int w) {
    tissuemix::Image img(h, w);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

inline tissuemix::LabelMask random_mask(tissuemix::Rng& rng, int h, int w, int classes, double bg_prob = 0.0) {
    tissuemix::LabelMask m(h, w, 0);
    for (auto& v : m.labels) {
        v = rng.bernoulli(bg_prob) ? m.background : static_cast<std::uint8_t>(rng.uniform_int(0, classes - 1));
    }
    return m;
}

}  // namespace fixtures
