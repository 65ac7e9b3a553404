#include "tissuemix/synthesis.hpp"

#include <cmath>
#include <string>

namespace tissuemix {

namespace {

std::string dims(int h, int w) { return std::to_string(h) + "x" + std::to_string(w); }

void blit(const LabeledImage& src, int src_row, int src_col, int height, int width, LabeledImage& dst, int dst_row,
          int dst_col) {
    for (int r = 0; r < height; ++r) {
        const auto* p = &src.image.pixels[(static_cast<std::size_t>(src_row + r) * src.image.width + src_col) * 3];
        std::copy(p, p + static_cast<std::size_t>(width) * 3,
                  &dst.image.pixels[(static_cast<std::size_t>(dst_row + r) * dst.image.width + dst_col) * 3]);
        const auto* m = &src.mask.labels[static_cast<std::size_t>(src_row + r) * src.mask.width + src_col];
        std::copy(m, m + width, &dst.mask.labels[static_cast<std::size_t>(dst_row + r) * dst.mask.width + dst_col]);
    }
}

TransformDescriptor crop_descriptor(const char* op, int source, int row, int col, int height, int width) {
    return {op, source, {{"row", row}, {"col", col}, {"height", height}, {"width", width}}};
}

}  // namespace

void SynthesisConfig::validate() const {
    require(out_height > 0 && out_width > 0, "output dimensions must be positive");
    require(alpha > 0.0 && alpha < beta && beta < 1.0, "anchor bounds must satisfy 0 < alpha < beta < 1");
    require(grid_order >= 1, "grid order m must be >= 1");
    require(bezier_anchors >= 3, "Bezier loops need N >= 3 anchors");
    require(samples_per_segment >= 2, "samples_per_segment must be >= 2");
    grid_policy.validate();
}

AnchorRange anchor_range(int size, double alpha, double beta) {
    // Integers strictly inside (alpha*size, beta*size); the slack absorbs
    // representation error when a bound is mathematically an integer.
    constexpr double kSlack = 1e-9;
    const AnchorRange r{static_cast<int>(std::floor(alpha * size + kSlack)) + 1,
                        static_cast<int>(std::ceil(beta * size - kSlack)) - 1};
    require(r.lo <= r.hi, "no integer anchor strictly between " + std::to_string(alpha * size) + " and " +
                              std::to_string(beta * size));
    return r;
}

GriddedResult build_gridded_image(std::span<const LabeledImage> tiles, const SynthesisConfig& config, Rng& rng) {
    config.validate();
    const int m = config.grid_order;
    const int H = config.out_height;
    const int W = config.out_width;
    require(static_cast<int>(tiles.size()) == m * m,
            "gridded image needs " + std::to_string(m * m) + " tiles, got " + std::to_string(tiles.size()));
    const int ch = (H + m - 1) / m;
    const int cw = (W + m - 1) / m;
    const std::uint8_t bg = tiles.front().mask.background;
    for (std::size_t k = 0; k < tiles.size(); ++k) {
        const auto& t = tiles[k];
        validate_aligned(t.image, t.mask);
        single_label(t.mask);
        require(t.mask.background == bg, "tiles disagree on the background index");
        require(t.image.height >= ch && t.image.width >= cw,
                "tile " + std::to_string(k) + " is " + dims(t.image.height, t.image.width) +
                    ", smaller than the required crop " + dims(ch, cw));
    }

    GriddedResult out{{Image(H, W), LabelMask(H, W, bg, bg)}, {}};
    for (int k = 0; k < m * m; ++k) {
        const auto& t = tiles[static_cast<std::size_t>(k)];
        const int row = static_cast<int>(rng.uniform_int(0, t.image.height - ch));
        const int col = static_cast<int>(rng.uniform_int(0, t.image.width - cw));
        out.crops.push_back(crop_descriptor("tile_crop", k, row, col, ch, cw));
        const int top = (k / m) * ch;
        const int left = (k % m) * cw;
        const int h = std::min(ch, H - top);
        const int w = std::min(cw, W - left);
        if (h > 0 && w > 0) blit(t, row, col, h, w, out.grid, top, left);
    }
    return out;
}

SynthesisResult mosaic_synthesize(std::span<const LabeledImage> grids, const SynthesisConfig& config, Rng& rng) {
    config.validate();
    require(grids.size() == 4, "Mosaic needs exactly 4 grids, got " + std::to_string(grids.size()));
    const int H = config.out_height;
    const int W = config.out_width;
    const std::uint8_t bg = grids.front().mask.background;
    for (std::size_t g = 0; g < grids.size(); ++g) {
        validate_aligned(grids[g].image, grids[g].mask);
        require(grids[g].mask.background == bg, "grids disagree on the background index");
        require(grids[g].image.height >= H && grids[g].image.width >= W,
                "grid " + std::to_string(g) + " is " + dims(grids[g].image.height, grids[g].image.width) +
                    ", smaller than the output " + dims(H, W));
    }
    const AnchorRange rh = anchor_range(H, config.alpha, config.beta);
    const AnchorRange rw = anchor_range(W, config.alpha, config.beta);
    const AnchorPoint anchor{static_cast<int>(rng.uniform_int(rh.lo, rh.hi)),
                             static_cast<int>(rng.uniform_int(rw.lo, rw.hi))};

    struct Block {
        int top, left, height, width;
    };
    const Block blocks[4] = {
        {0, 0, anchor.h_a, anchor.w_a},
        {anchor.h_a, 0, H - anchor.h_a, anchor.w_a},
        {0, anchor.w_a, anchor.h_a, W - anchor.w_a},
        {anchor.h_a, anchor.w_a, H - anchor.h_a, W - anchor.w_a},
    };

    SynthesisResult out{{Image(H, W), LabelMask(H, W, bg, bg)}, {}};
    out.recipe.strategy = Strategy::mosaic;
    out.recipe.anchor = anchor;
    for (int g = 0; g < 4; ++g) {
        const auto& src = grids[static_cast<std::size_t>(g)];
        const Block& b = blocks[g];
        const int row = static_cast<int>(rng.uniform_int(0, src.image.height - b.height));
        const int col = static_cast<int>(rng.uniform_int(0, src.image.width - b.width));
        blit(src, row, col, b.height, b.width, out.sample, b.top, b.left);
        out.recipe.augmentations.push_back(crop_descriptor("quadrant_crop", g, row, col, b.height, b.width));
    }
    return out;
}

SynthesisResult mosaic_from_tiles(std::span<const LabeledImage> tiles, const SynthesisConfig& config, Rng& rng) {
    config.validate();
    const int per_grid = config.tiles_per_grid();
    require(static_cast<int>(tiles.size()) == 4 * per_grid,
            "Mosaic needs " + std::to_string(4 * per_grid) + " tiles, got " + std::to_string(tiles.size()));
    std::vector<LabeledImage> grids;
    std::vector<TransformDescriptor> applied;
    for (int g = 0; g < 4; ++g) {
        auto gridded = build_gridded_image(tiles.subspan(static_cast<std::size_t>(g * per_grid), per_grid), config, rng);
        for (auto& d : gridded.crops) {
            d.source += g * per_grid;
            applied.push_back(std::move(d));
        }
        auto aug = augment(gridded.grid, rng, config.grid_policy, g);
        applied.insert(applied.end(), aug.applied.begin(), aug.applied.end());
        grids.push_back(std::move(aug.sample));
    }
    auto out = mosaic_synthesize(grids, config, rng);
    applied.insert(applied.end(), out.recipe.augmentations.begin(), out.recipe.augmentations.end());
    out.recipe.augmentations = std::move(applied);
    return out;
}

LabeledImage mix_with_mask(const LabeledImage& inside, const LabeledImage& outside, const geometry::BinaryMask& mask) {
    validate_aligned(inside.image, inside.mask);
    validate_aligned(outside.image, outside.mask);
    const int h = inside.image.height;
    const int w = inside.image.width;
    require(outside.image.height == h && outside.image.width == w && mask.height == h && mask.width == w,
            "mixing inputs differ in shape");
    require(inside.mask.background == outside.mask.background, "mixing inputs disagree on the background index");
    LabeledImage out{Image(h, w), LabelMask(h, w, inside.mask.background, inside.mask.background)};
    for (std::size_t i = 0; i < inside.mask.pixel_count(); ++i) {
        const LabeledImage& src = mask.bits[i] ? inside : outside;
        for (std::size_t ch = 0; ch < 3; ++ch) out.image.pixels[i * 3 + ch] = src.image.pixels[i * 3 + ch];
        out.mask.labels[i] = src.mask.labels[i];
    }
    return out;
}

SynthesisResult bezier_synthesize(const LabeledImage& foreground, const LabeledImage& background,
                                  const SynthesisConfig& config, Rng& rng) {
    config.validate();
    for (const auto* s : {&foreground, &background}) {
        validate_aligned(s->image, s->mask);
        require(s->image.height == config.out_height && s->image.width == config.out_width,
                "Bezier inputs must be " + dims(config.out_height, config.out_width) + ", got " +
                    dims(s->image.height, s->image.width));
        single_label(s->mask);
    }
    const auto loop = geometry::random_loop(rng, config.bezier_anchors);
    const auto raster = geometry::rasterize_loop(loop, config.out_height, config.out_width, config.samples_per_segment);
    SynthesisResult out{mix_with_mask(foreground, background, raster.mask), {}};
    out.recipe.strategy = Strategy::bezier;
    out.recipe.loop = serialize_loop(loop);
    return out;
}

SerializedLoop serialize_loop(const geometry::BezierLoop& loop) {
    SerializedLoop s;
    for (const auto& a : loop.anchors()) s.anchors.emplace_back(a.x, a.y);
    for (const auto& t : loop.tangents()) s.tangents.emplace_back(t.x, t.y);
    return s;
}

geometry::BezierLoop deserialize_loop(const SerializedLoop& loop) {
    std::vector<geometry::Point2> anchors;
    std::vector<geometry::Vec2> tangents;
    for (const auto& [x, y] : loop.anchors) anchors.push_back({x, y});
    for (const auto& [x, y] : loop.tangents) tangents.push_back({x, y});
    return geometry::build_closed_loop(std::move(anchors), std::move(tangents));
}

}  // namespace tissuemix
