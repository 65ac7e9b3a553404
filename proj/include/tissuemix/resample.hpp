#pragma once

#include <span>
#include <vector>

#include "tissuemix/image.hpp"

namespace tissuemix {

/// Symmetric reflection of an arbitrary integer index into [0, n).
/// The edge pixel is repeated: ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect_index(int i, int n);

/// Bilinear resize with half-pixel centers (source = (dst + 0.5) * in / out - 0.5,
/// clamped to the valid range). Same-size resize is the identity.
Image resize_bilinear(const Image& image, int out_h, int out_w);

/// Nearest-neighbour resize for categorical masks.
LabelMask resize_nearest(const LabelMask& mask, int out_h, int out_w);

/// Bilinear resize of a planar C x H x W real tensor, same sampling as resize_bilinear.
std::vector<double> resize_bilinear_planar(std::span<const double> values, int channels, int h, int w,
                                           int out_h, int out_w);

/// Bilinear sample at real coordinates with reflect padding.
double sample_bilinear(const Image& image, double y, double x, int ch);
/// All three channels of sample_bilinear, rounded with to_u8.
std::array<std::uint8_t, 3> sample_bilinear_rgb(const Image& image, double y, double x);

/// Nearest label at real coordinates with reflect padding.
std::uint8_t sample_nearest(const LabelMask& mask, double y, double x);

std::uint8_t to_u8(double v);

}  // namespace tissuemix
