#pragma once

#include <vector>

#include "tissuemix/image.hpp"
#include "tissuemix/recipe.hpp"
#include "tissuemix/rng.hpp"

namespace tissuemix {

/// Random preprocessing applied identically to an image and its mask, in
/// this order: horizontal flip, vertical flip, integer shift, scale,
/// right-angle rotation, free rotation, crop. A disabled step draws nothing
/// from the generator.
struct AugmentPolicy {
    double hflip_prob = 0.0;
    double vflip_prob = 0.0;
    double max_shift_frac = 0.0;  // shift up to +/- frac * size, per axis
    double scale_min = 1.0;
    double scale_max = 1.0;
    bool right_angle_rotation = false;
    double max_rotation_deg = 0.0;  // free rotation in [-max, +max]
    int crop_height = 0;  // 0 disables the crop
    int crop_width = 0;

    static AugmentPolicy identity() { return {}; }
    /// Policy used on Mosaic grids before splitting.
    static AugmentPolicy mosaic_default();
    void validate() const;
};

struct Augmented {
    LabeledImage sample;
    std::vector<TransformDescriptor> applied;
};

Augmented augment(const LabeledImage& input, Rng& rng, const AugmentPolicy& policy, int source = -1);

/// Re-applies one recorded transform.
LabeledImage apply_transform(const LabeledImage& input, const TransformDescriptor& t);

// Deterministic building blocks. Geometry is resampled about the image
// centre with reflect padding; pixels bilinearly, labels nearest-neighbour.
LabeledImage flip_horizontal(const LabeledImage& in);
LabeledImage flip_vertical(const LabeledImage& in);
LabeledImage rotate_quarter_turns(const LabeledImage& in, int quarter_turns);  // anti-clockwise on screen
LabeledImage shift(const LabeledImage& in, int dy, int dx);
LabeledImage scale_about_center(const LabeledImage& in, double factor);
LabeledImage rotate_about_center(const LabeledImage& in, double degrees);
LabeledImage crop(const LabeledImage& in, int row, int col, int height, int width);

Image crop(const Image& in, int row, int col, int height, int width);
LabelMask crop(const LabelMask& in, int row, int col, int height, int width);

}  // namespace tissuemix
