#pragma once

#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tissuemix/image.hpp"
#include "tissuemix/tensor.hpp"

namespace tissuemix::tiling {

inline constexpr int kDefaultWindow = 224;

/// Top-left corner of a window.
struct Window {
    int row = 0;
    int col = 0;

    auto operator<=>(const Window&) const = default;
};

struct TilePlan {
    int height = 0;
    int width = 0;
    int window = kDefaultWindow;
    double overlap = 0.0;
    int stride = 0;
    std::vector<Window> windows;  // row-major
};

/// stride = ceil(window * (1 - overlap)); offsets step by the stride and the
/// last one on each axis is pulled back so the window ends at the edge.
TilePlan plan_tiles(int height, int width, int window = kDefaultWindow, double overlap = 0.0);

/// Offsets along one axis, as used by plan_tiles.
std::vector<int> axis_offsets(int size, int window, int stride);

/// How many windows of the plan cover each pixel (row-major).
std::vector<int> coverage_counts(const TilePlan& plan);

struct Tile {
    Window offset;
    ProbabilityMap prob;  // window-sized
};

/// Mean over the tiles covering each pixel, then renormalised per pixel.
/// Summation runs in a fixed order independent of the input order.
/// Throws if any pixel of the out_h x out_w canvas is uncovered.
ProbabilityMap fuse_probabilities(std::span<const Tile> tiles, int out_h, int out_w);

/// As above, additionally checking that every tile sits on a planned window
/// and has the planned size.
ProbabilityMap fuse_probabilities(std::span<const Tile> tiles, const TilePlan& plan);

/// Horizontal flip followed by `quarter_turns` anticlockwise 90-degree turns.
struct DihedralVariant {
    int quarter_turns = 0;  // 0..3
    bool hflip = false;

    int index() const { return (hflip ? 4 : 0) + quarter_turns; }
    auto operator<=>(const DihedralVariant&) const = default;
};

DihedralVariant inverse(DihedralVariant v);

/// Which test-time variants to use. `rot_flip` is the four rotations plus
/// horizontal and vertical flips; `d4` is the full group of eight.
enum class TtaSet { none, rot_flip, d4 };

TtaSet parse_tta_set(std::string_view name);
std::string_view to_string(TtaSet set);
std::vector<DihedralVariant> variants(TtaSet set);

Image apply(DihedralVariant v, const Image& image);
LabelMask apply(DihedralVariant v, const LabelMask& mask);
Tensor3 apply(DihedralVariant v, const Tensor3& t);

std::vector<std::pair<DihedralVariant, Image>> tta_expand(const Image& image, TtaSet set = TtaSet::d4);

/// Maps every prediction back to the original frame and averages them.
/// Variants must be distinct and agree on the original-frame size.
ProbabilityMap tta_fuse(std::span<const std::pair<DihedralVariant, ProbabilityMap>> predictions);

/// Per-pixel argmax with ties going to the lowest class index.
LabelMask argmax_mask(const Tensor3& prob);

inline constexpr double kDefaultScales[] = {0.75, 1.0, 1.25};

/// round(size * scale), at least 1.
int scaled_size(int size, double scale);

/// Resizes each scaled prediction to out_h x out_w (bilinear on
/// probabilities), averages in ascending scale order and renormalises.
ProbabilityMap multiscale_fuse(std::span<const std::pair<double, ProbabilityMap>> predictions, int out_h, int out_w);

struct ScalePlan {
    double scale = 1.0;
    TilePlan tiles;  // on the rescaled image
};

/// One tile plan per scale. The window shrinks to the rescaled image when
/// the image becomes smaller than the window.
std::vector<ScalePlan> plan_inference(int height, int width, int window, double overlap,
                                      std::span<const double> scales);

/// A model output for one (scale, variant, window) work item, expressed in
/// the variant's frame.
struct TileRecord {
    double scale = 1.0;
    DihedralVariant variant;
    Window offset;
    ProbabilityMap prob;
};

/// Undoes TTA per window, stitches windows per scale, then fuses scales
/// into an out_h x out_w map.
ProbabilityMap fuse_records(std::span<const TileRecord> records, int out_h, int out_w);

}  // namespace tissuemix::tiling
