#include "tissuemix/resample.hpp"

#include <algorithm>
#include <cmath>

namespace tissuemix {

namespace {

struct Tap {
    int i0;
    int i1;
    double f;
};

std::vector<Tap> axis_taps(int in, int out) {
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    for (int d = 0; d < out; ++d) {
        double s = (d + 0.5) * in / out - 0.5;
        s = std::clamp(s, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(s));
        const int i1 = std::min(i0 + 1, in - 1);
        taps[static_cast<std::size_t>(d)] = {i0, i1, s - i0};
    }
    return taps;
}

}  // namespace

int reflect_index(int i, int n) {
    if (i >= 0 && i < n) return i;
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

std::uint8_t to_u8(double v) {
    // Round half away from zero, as lround does for non-negative values.
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(static_cast<int>(v + 0.5));
}

Image resize_bilinear(const Image& image, int out_h, int out_w) {
    validate(image);
    require(out_h > 0 && out_w > 0, "resize: output dimensions must be positive");
    const auto ty = axis_taps(image.height, out_h);
    const auto tx = axis_taps(image.width, out_w);
    Image out(out_h, out_w);
    for (int r = 0; r < out_h; ++r) {
        const Tap& y = ty[static_cast<std::size_t>(r)];
        for (int c = 0; c < out_w; ++c) {
            const Tap& x = tx[static_cast<std::size_t>(c)];
            for (int ch = 0; ch < 3; ++ch) {
                const double top = (1.0 - x.f) * image.at(y.i0, x.i0, ch) + x.f * image.at(y.i0, x.i1, ch);
                const double bot = (1.0 - x.f) * image.at(y.i1, x.i0, ch) + x.f * image.at(y.i1, x.i1, ch);
                out.at(r, c, ch) = to_u8((1.0 - y.f) * top + y.f * bot);
            }
        }
    }
    return out;
}

LabelMask resize_nearest(const LabelMask& mask, int out_h, int out_w) {
    validate(mask);
    require(out_h > 0 && out_w > 0, "resize: output dimensions must be positive");
    LabelMask out(out_h, out_w, mask.background, mask.background);
    for (int r = 0; r < out_h; ++r) {
        const int sr = std::min(static_cast<int>(std::floor((r + 0.5) * mask.height / out_h)), mask.height - 1);
        for (int c = 0; c < out_w; ++c) {
            const int sc = std::min(static_cast<int>(std::floor((c + 0.5) * mask.width / out_w)), mask.width - 1);
            out.at(r, c) = mask.at(sr, sc);
        }
    }
    return out;
}

std::vector<double> resize_bilinear_planar(std::span<const double> values, int channels, int h, int w,
                                           int out_h, int out_w) {
    require(channels > 0 && h > 0 && w > 0 && out_h > 0 && out_w > 0, "resize: dimensions must be positive");
    require(values.size() == static_cast<std::size_t>(channels) * h * w, "resize: buffer size mismatch");
    const auto ty = axis_taps(h, out_h);
    const auto tx = axis_taps(w, out_w);
    std::vector<double> out(static_cast<std::size_t>(channels) * out_h * out_w);
    for (int ch = 0; ch < channels; ++ch) {
        const double* plane = values.data() + static_cast<std::size_t>(ch) * h * w;
        double* dst = out.data() + static_cast<std::size_t>(ch) * out_h * out_w;
        for (int r = 0; r < out_h; ++r) {
            const Tap& y = ty[static_cast<std::size_t>(r)];
            for (int c = 0; c < out_w; ++c) {
                const Tap& x = tx[static_cast<std::size_t>(c)];
                const double top = (1.0 - x.f) * plane[y.i0 * w + x.i0] + x.f * plane[y.i0 * w + x.i1];
                const double bot = (1.0 - x.f) * plane[y.i1 * w + x.i0] + x.f * plane[y.i1 * w + x.i1];
                dst[r * out_w + c] = (1.0 - y.f) * top + y.f * bot;
            }
        }
    }
    return out;
}

double sample_bilinear(const Image& image, double y, double x, int ch) {
    const double fy0 = std::floor(y);
    const double fx0 = std::floor(x);
    const double fy = y - fy0;
    const double fx = x - fx0;
    const int y0 = reflect_index(static_cast<int>(fy0), image.height);
    const int y1 = reflect_index(static_cast<int>(fy0) + 1, image.height);
    const int x0 = reflect_index(static_cast<int>(fx0), image.width);
    const int x1 = reflect_index(static_cast<int>(fx0) + 1, image.width);
    const double top = (1.0 - fx) * image.at(y0, x0, ch) + fx * image.at(y0, x1, ch);
    const double bot = (1.0 - fx) * image.at(y1, x0, ch) + fx * image.at(y1, x1, ch);
    return (1.0 - fy) * top + fy * bot;
}

std::array<std::uint8_t, 3> sample_bilinear_rgb(const Image& image, double y, double x) {
    const double fy0 = std::floor(y);
    const double fx0 = std::floor(x);
    const double fy = y - fy0;
    const double fx = x - fx0;
    const int y0 = reflect_index(static_cast<int>(fy0), image.height);
    const int y1 = reflect_index(static_cast<int>(fy0) + 1, image.height);
    const int x0 = reflect_index(static_cast<int>(fx0), image.width);
    const int x1 = reflect_index(static_cast<int>(fx0) + 1, image.width);
    const std::uint8_t* p00 = &image.pixels[(static_cast<std::size_t>(y0) * image.width + x0) * 3];
    const std::uint8_t* p01 = &image.pixels[(static_cast<std::size_t>(y0) * image.width + x1) * 3];
    const std::uint8_t* p10 = &image.pixels[(static_cast<std::size_t>(y1) * image.width + x0) * 3];
    const std::uint8_t* p11 = &image.pixels[(static_cast<std::size_t>(y1) * image.width + x1) * 3];
    std::array<std::uint8_t, 3> out{};
    for (int ch = 0; ch < 3; ++ch) {
        const double top = (1.0 - fx) * p00[ch] + fx * p01[ch];
        const double bot = (1.0 - fx) * p10[ch] + fx * p11[ch];
        out[static_cast<std::size_t>(ch)] = to_u8((1.0 - fy) * top + fy * bot);
    }
    return out;
}

std::uint8_t sample_nearest(const LabelMask& mask, double y, double x) {
    const int r = reflect_index(static_cast<int>(std::floor(y + 0.5)), mask.height);
    const int c = reflect_index(static_cast<int>(std::floor(x + 0.5)), mask.width);
    return mask.at(r, c);
}

}  // namespace tissuemix
