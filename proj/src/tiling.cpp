#include "tissuemix/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "tissuemix/resample.hpp"

namespace tissuemix::tiling {

namespace {

// Source coordinate in the untransformed raster (sh x sw) for destination
// pixel (r, c) of the transformed one.
struct Mapping {
    int sh, sw;  // source dims
    DihedralVariant v;

    int dh() const { return v.quarter_turns % 2 ? sw : sh; }
    int dw() const { return v.quarter_turns % 2 ? sh : sw; }

    std::pair<int, int> source(int r, int c) const {
        int h = dh(), w = dw();
        for (int i = 0; i < v.quarter_turns; ++i) {
            // one anticlockwise turn: dst(r, c) = src(c, src_w - 1 - r), src is w x h
            const int src_w = h;
            const int nr = c, nc = src_w - 1 - r;
            r = nr;
            c = nc;
            std::swap(h, w);
        }
        if (v.hflip) c = w - 1 - c;
        return {r, c};
    }
};

void check_variant(DihedralVariant v) {
    require(v.quarter_turns >= 0 && v.quarter_turns <= 3, "quarter_turns must be in 0..3");
}

bool tile_less(const Tile& a, const Tile& b) {
    if (a.offset != b.offset) return a.offset < b.offset;
    if (a.prob.height != b.prob.height) return a.prob.height < b.prob.height;
    if (a.prob.width != b.prob.width) return a.prob.width < b.prob.width;
    return a.prob.values < b.prob.values;
}

}  // namespace

std::vector<int> axis_offsets(int size, int window, int stride) {
    require(window > 0 && window <= size, "window " + std::to_string(window) + " does not fit in " + std::to_string(size));
    require(stride > 0, "stride must be positive");
    std::vector<int> out;
    for (int o = 0;; o += stride) {
        if (o + window >= size) {
            out.push_back(size - window);
            break;
        }
        out.push_back(o);
    }
    return out;
}

TilePlan plan_tiles(int height, int width, int window, double overlap) {
    require(height > 0 && width > 0, "image dimensions must be positive");
    require(std::isfinite(overlap) && overlap >= 0.0 && overlap < 1.0, "overlap must lie in [0, 1)");
    require(window > 0 && window <= std::min(height, width),
            "window " + std::to_string(window) + " is larger than the " + std::to_string(height) + "x" +
                std::to_string(width) + " image");
    TilePlan plan{height, width, window, overlap, 0, {}};
    plan.stride = std::max(1, static_cast<int>(std::ceil(window * (1.0 - overlap) - 1e-9)));
    const auto rows = axis_offsets(height, window, plan.stride);
    const auto cols = axis_offsets(width, window, plan.stride);
    for (int r : rows)
        for (int c : cols) plan.windows.push_back({r, c});
    return plan;
}

std::vector<int> coverage_counts(const TilePlan& plan) {
    std::vector<int> counts(static_cast<std::size_t>(plan.height) * plan.width, 0);
    for (const auto& w : plan.windows)
        for (int r = w.row; r < w.row + plan.window; ++r)
            for (int c = w.col; c < w.col + plan.window; ++c) ++counts[static_cast<std::size_t>(r) * plan.width + c];
    return counts;
}

ProbabilityMap fuse_probabilities(std::span<const Tile> tiles, int out_h, int out_w) {
    require(!tiles.empty(), "no tiles to fuse");
    require(out_h > 0 && out_w > 0, "output dimensions must be positive");
    const int C = tiles.front().prob.channels;
    std::vector<const Tile*> order;
    for (const auto& t : tiles) {
        require(t.prob.channels == C, "tiles disagree on the class count");
        require(t.prob.values.size() == static_cast<std::size_t>(C) * t.prob.plane() && t.prob.height > 0 &&
                    t.prob.width > 0,
                "malformed tile tensor");
        require(t.offset.row >= 0 && t.offset.col >= 0 && t.offset.row + t.prob.height <= out_h &&
                    t.offset.col + t.prob.width <= out_w,
                "tile at (" + std::to_string(t.offset.row) + "," + std::to_string(t.offset.col) + ") leaves the canvas");
        order.push_back(&t);
    }
    std::sort(order.begin(), order.end(), [](const Tile* a, const Tile* b) { return tile_less(*a, *b); });

    ProbabilityMap out(C, out_h, out_w, 0.0);
    std::vector<int> count(static_cast<std::size_t>(out_h) * out_w, 0);
    for (const Tile* t : order) {
        for (int r = 0; r < t->prob.height; ++r) {
            for (int c = 0; c < t->prob.width; ++c) {
                const int y = t->offset.row + r, x = t->offset.col + c;
                ++count[static_cast<std::size_t>(y) * out_w + x];
                for (int k = 0; k < C; ++k) out.at(k, y, x) += t->prob.at(k, r, c);
            }
        }
    }
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const int n = count[static_cast<std::size_t>(y) * out_w + x];
            require(n > 0, "pixel (" + std::to_string(y) + "," + std::to_string(x) + ") is not covered by any tile");
            for (int k = 0; k < C; ++k) out.at(k, y, x) /= n;
        }
    }
    renormalize(out);
    return out;
}

ProbabilityMap fuse_probabilities(std::span<const Tile> tiles, const TilePlan& plan) {
    for (const auto& t : tiles) {
        require(std::find(plan.windows.begin(), plan.windows.end(), t.offset) != plan.windows.end(),
                "tile at (" + std::to_string(t.offset.row) + "," + std::to_string(t.offset.col) +
                    ") is not a planned window");
        require(t.prob.height == plan.window && t.prob.width == plan.window,
                "tile is " + std::to_string(t.prob.height) + "x" + std::to_string(t.prob.width) +
                    ", plan window is " + std::to_string(plan.window));
    }
    return fuse_probabilities(tiles, plan.height, plan.width);
}

DihedralVariant inverse(DihedralVariant v) {
    check_variant(v);
    if (v.hflip) return v;  // (R^k F)(R^k F) = R^k R^-k = identity
    return {(4 - v.quarter_turns) % 4, false};
}

TtaSet parse_tta_set(std::string_view name) {
    if (name == "none") return TtaSet::none;
    if (name == "rot_flip") return TtaSet::rot_flip;
    if (name == "d4") return TtaSet::d4;
    fail("unknown TTA set '" + std::string(name) + "' (expected none, rot_flip or d4)");
}

std::string_view to_string(TtaSet set) {
    switch (set) {
        case TtaSet::none: return "none";
        case TtaSet::rot_flip: return "rot_flip";
        case TtaSet::d4: return "d4";
    }
    return "none";
}

std::vector<DihedralVariant> variants(TtaSet set) {
    switch (set) {
        case TtaSet::none: return {{0, false}};
        // flip then a half turn is a vertical flip
        case TtaSet::rot_flip: return {{0, false}, {1, false}, {2, false}, {3, false}, {0, true}, {2, true}};
        case TtaSet::d4: break;
    }
    std::vector<DihedralVariant> all;
    for (int f = 0; f < 2; ++f)
        for (int k = 0; k < 4; ++k) all.push_back({k, f == 1});
    return all;
}

Image apply(DihedralVariant v, const Image& image) {
    check_variant(v);
    validate(image);
    const Mapping m{image.height, image.width, v};
    Image out(m.dh(), m.dw());
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const auto [sr, sc] = m.source(r, c);
            for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = image.at(sr, sc, ch);
        }
    }
    return out;
}

LabelMask apply(DihedralVariant v, const LabelMask& mask) {
    check_variant(v);
    validate(mask);
    const Mapping m{mask.height, mask.width, v};
    LabelMask out(m.dh(), m.dw(), 0, mask.background);
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const auto [sr, sc] = m.source(r, c);
            out.at(r, c) = mask.at(sr, sc);
        }
    }
    return out;
}

Tensor3 apply(DihedralVariant v, const Tensor3& t) {
    check_variant(v);
    const Mapping m{t.height, t.width, v};
    Tensor3 out(t.channels, m.dh(), m.dw());
    for (int r = 0; r < out.height; ++r) {
        for (int c = 0; c < out.width; ++c) {
            const auto [sr, sc] = m.source(r, c);
            for (int k = 0; k < t.channels; ++k) out.at(k, r, c) = t.at(k, sr, sc);
        }
    }
    return out;
}

std::vector<std::pair<DihedralVariant, Image>> tta_expand(const Image& image, TtaSet set) {
    std::vector<std::pair<DihedralVariant, Image>> out;
    for (auto v : variants(set)) out.emplace_back(v, apply(v, image));
    return out;
}

ProbabilityMap tta_fuse(std::span<const std::pair<DihedralVariant, ProbabilityMap>> predictions) {
    require(!predictions.empty(), "no predictions to fuse");
    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return predictions[a].first < predictions[b].first; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        require(predictions[order[i]].first != predictions[order[i - 1]].first, "duplicate TTA variant");
    }

    ProbabilityMap out;
    for (auto i : order) {
        const auto& [v, p] = predictions[i];
        const auto back = apply(inverse(v), p);
        if (out.values.empty()) {
            out = ProbabilityMap(back.channels, back.height, back.width, 0.0);
        } else {
            require(back.same_shape(out), "TTA predictions disagree on size once mapped back");
        }
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += back.values[k];
    }
    const double n = static_cast<double>(predictions.size());
    for (double& x : out.values) x /= n;
    return out;
}

LabelMask argmax_mask(const Tensor3& prob) {
    require(prob.channels > 0 && prob.channels < kDefaultBackground, "argmax needs 1..254 channels");
    LabelMask out(prob.height, prob.width, 0);
    for (int y = 0; y < prob.height; ++y) {
        for (int x = 0; x < prob.width; ++x) {
            int best = 0;
            for (int k = 1; k < prob.channels; ++k)
                if (prob.at(k, y, x) > prob.at(best, y, x)) best = k;
            out.at(y, x) = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

int scaled_size(int size, double scale) {
    require(std::isfinite(scale) && scale > 0.0, "scale must be positive");
    return std::max(1, static_cast<int>(std::lround(size * scale)));
}

ProbabilityMap multiscale_fuse(std::span<const std::pair<double, ProbabilityMap>> predictions, int out_h, int out_w) {
    require(!predictions.empty(), "no scaled predictions to fuse");
    std::vector<std::size_t> order(predictions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return predictions[a].first < predictions[b].first; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        require(predictions[order[i]].first != predictions[order[i - 1]].first, "duplicate scale");
    }
    const int C = predictions.front().second.channels;
    ProbabilityMap out(C, out_h, out_w, 0.0);
    for (auto i : order) {
        const auto& p = predictions[i].second;
        require(p.channels == C, "scaled predictions disagree on the class count");
        const auto resized = resize_bilinear_planar(p.values, C, p.height, p.width, out_h, out_w);
        for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] += resized[k];
    }
    for (double& x : out.values) x /= static_cast<double>(predictions.size());
    renormalize(out);
    return out;
}

std::vector<ScalePlan> plan_inference(int height, int width, int window, double overlap,
                                      std::span<const double> scales) {
    require(!scales.empty(), "at least one scale is required");
    std::vector<ScalePlan> out;
    for (double s : scales) {
        const int sh = scaled_size(height, s), sw = scaled_size(width, s);
        for (const auto& p : out) require(p.scale != s, "duplicate scale");
        out.push_back({s, plan_tiles(sh, sw, std::min({window, sh, sw}), overlap)});
    }
    return out;
}

ProbabilityMap fuse_records(std::span<const TileRecord> records, int out_h, int out_w) {
    require(!records.empty(), "no tile records to fuse");
    // scale -> window -> variant predictions
    std::map<double, std::map<Window, std::vector<std::pair<DihedralVariant, ProbabilityMap>>>> groups;
    for (const auto& r : records) groups[r.scale][r.offset].emplace_back(r.variant, r.prob);

    std::vector<std::pair<double, ProbabilityMap>> per_scale;
    for (const auto& [scale, windows] : groups) {
        std::vector<Tile> tiles;
        for (const auto& [offset, preds] : windows) tiles.push_back({offset, tta_fuse(preds)});
        per_scale.emplace_back(scale, fuse_probabilities(tiles, scaled_size(out_h, scale), scaled_size(out_w, scale)));
    }
    return multiscale_fuse(per_scale, out_h, out_w);
}

}  // namespace tissuemix::tiling
