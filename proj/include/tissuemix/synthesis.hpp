#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tissuemix/augment.hpp"
#include "tissuemix/geometry.hpp"
#include "tissuemix/image.hpp"
#include "tissuemix/recipe.hpp"
#include "tissuemix/rng.hpp"

namespace tissuemix {

struct SynthesisConfig {
    int out_height = 224;
    int out_width = 224;
    double alpha = 0.2;
    double beta = 0.8;
    int grid_order = 2;       // m: each Mosaic grid is spliced from m*m tiles
    int bezier_anchors = 6;   // N: segments per Bezier loop
    int samples_per_segment = geometry::kDefaultSamplesPerSegment;
    std::uint64_t seed = 0;
    AugmentPolicy grid_policy = AugmentPolicy::mosaic_default();

    void validate() const;
    int tiles_per_grid() const { return grid_order * grid_order; }
};

/// Closed integer range of valid anchor coordinates for one axis: the
/// integers strictly between alpha*size and beta*size.
struct AnchorRange {
    int lo = 0;
    int hi = 0;
};
AnchorRange anchor_range(int size, double alpha, double beta);

struct SynthesisResult {
    LabeledImage sample;
    SynthesisRecipe recipe;  // geometry and transforms; ids and seed are set by the caller
};

struct GriddedResult {
    LabeledImage grid;
    std::vector<TransformDescriptor> crops;
};

/// Random ceil(H/m) x ceil(W/m) crop of each single-labeled tile, placed in
/// raster order; cells on the last row/column are truncated to fit H x W.
GriddedResult build_gridded_image(std::span<const LabeledImage> tiles, const SynthesisConfig& config, Rng& rng);

/// Four-way split at a random anchor. Grid 0 fills the top-left block,
/// grid 1 bottom-left, grid 2 top-right, grid 3 bottom-right.
SynthesisResult mosaic_synthesize(std::span<const LabeledImage> grids, const SynthesisConfig& config, Rng& rng);

/// Full Mosaic from 4*m*m single-labeled tiles: gridding, grid augmentation,
/// then the anchor split.
SynthesisResult mosaic_from_tiles(std::span<const LabeledImage> tiles, const SynthesisConfig& config, Rng& rng);

/// Output = mask ? foreground : background, pixelwise, with the mask built
/// from a random closed Bezier loop.
SynthesisResult bezier_synthesize(const LabeledImage& foreground, const LabeledImage& background,
                                  const SynthesisConfig& config, Rng& rng);

/// Pixelwise selection between two aligned samples.
LabeledImage mix_with_mask(const LabeledImage& inside, const LabeledImage& outside, const geometry::BinaryMask& mask);

SerializedLoop serialize_loop(const geometry::BezierLoop& loop);
geometry::BezierLoop deserialize_loop(const SerializedLoop& loop);

}  // namespace tissuemix
