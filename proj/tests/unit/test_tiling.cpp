#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "tissuemix/augment.hpp"
#include "tissuemix/tiling.hpp"

using namespace tissuemix;
using namespace tissuemix::tiling;

namespace {

ProbabilityMap random_probs(Rng& rng, int c, int h, int w) {
    ProbabilityMap p(c, h, w);
    for (double& v : p.values) v = rng.uniform(0.01, 1.0);
    renormalize(p);
    return p;
}

ProbabilityMap crop(const ProbabilityMap& p, Window o, int size) {
    ProbabilityMap out(p.channels, size, size);
    for (int k = 0; k < p.channels; ++k)
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c) out.at(k, r, c) = p.at(k, o.row + r, o.col + c);
    return out;
}

double max_channel_sum_error(const Tensor3& p) {
    double worst = 0;
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            double s = 0;
            for (int k = 0; k < p.channels; ++k) s += p.at(k, y, x);
            worst = std::max(worst, std::abs(s - 1.0));
        }
    return worst;
}

}  // namespace

TEST_CASE("plan fixtures") {
    const auto single = plan_tiles(224, 224, 224, 0.5);
    CHECK(single.windows == std::vector<Window>{{0, 0}});

    const auto four = plan_tiles(448, 448, 224, 0.0);
    CHECK(four.stride == 224);
    CHECK(four.windows == std::vector<Window>{{0, 0}, {0, 224}, {224, 0}, {224, 224}});

    const auto half = plan_tiles(336, 336, 224, 0.5);
    CHECK(half.stride == 112);
    CHECK(half.windows == std::vector<Window>{{0, 0}, {0, 112}, {112, 0}, {112, 112}});

    const auto snapped = plan_tiles(500, 300, 224, 0.0);
    CHECK(axis_offsets(500, 224, 224) == std::vector<int>{0, 224, 276});
    CHECK(snapped.windows.size() == 6);

    CHECK_THROWS_AS(plan_tiles(100, 300, 224, 0.0), InvalidArgument);
    CHECK_THROWS_AS(plan_tiles(300, 300, 224, 1.0), InvalidArgument);
    CHECK_THROWS_AS(plan_tiles(300, 300, 224, -0.1), InvalidArgument);
}

TEST_CASE("random plans cover every pixel and stay in bounds") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const int h = static_cast<int>(rng.uniform_int(1, 700));
        const int w = static_cast<int>(rng.uniform_int(1, 700));
        const int window = static_cast<int>(rng.uniform_int(1, std::min(h, w)));
        const double overlap = rng.uniform(0.0, 0.95);
        const auto plan = plan_tiles(h, w, window, overlap);
        CHECK(plan.stride == static_cast<int>(std::ceil(window * (1 - overlap) - 1e-9)));
        for (const auto& win : plan.windows) {
            CHECK(win.row >= 0);
            CHECK(win.col >= 0);
            CHECK(win.row + window <= h);
            CHECK(win.col + window <= w);
        }
        const auto counts = coverage_counts(plan);
        CHECK(*std::min_element(counts.begin(), counts.end()) >= 1);
        const std::set<Window> unique(plan.windows.begin(), plan.windows.end());
        CHECK(unique.size() == plan.windows.size());
    }
}

TEST_CASE("single tile and duplicated tile fusion") {
    Rng rng(3);
    const auto p = random_probs(rng, 3, 8, 8);
    const std::vector<Tile> one{{{0, 0}, p}};
    const auto fused = fuse_probabilities(one, plan_tiles(8, 8, 8, 0.0));
    for (std::size_t i = 0; i < p.values.size(); ++i) CHECK(fused.values[i] == doctest::Approx(p.values[i]).epsilon(1e-15));

    const auto q = random_probs(rng, 3, 8, 8);
    const std::vector<Tile> two{{{0, 0}, p}, {{0, 0}, q}};
    const auto mean = fuse_probabilities(two, 8, 8);
    for (std::size_t i = 0; i < p.values.size(); ++i)
        CHECK(mean.values[i] == doctest::Approx((p.values[i] + q.values[i]) / 2).epsilon(1e-12));
}

TEST_CASE("50% overlap fusion matches the per-pixel contribution oracle") {
    Rng rng(5);
    const auto plan = plan_tiles(336, 336, 224, 0.5);
    std::vector<Tile> tiles;
    for (const auto& w : plan.windows) tiles.push_back({w, random_probs(rng, 3, 224, 224)});
    const auto fused = fuse_probabilities(tiles, plan);
    CHECK(max_channel_sum_error(fused) <= 1e-6);

    // Oracle: for each pixel, average the covering tiles in plan order, then normalise.
    double worst = 0;
    for (int y = 0; y < 336; y += 7) {
        for (int x = 0; x < 336; x += 5) {
            double acc[3] = {0, 0, 0};
            int n = 0;
            for (const auto& t : tiles) {
                if (y < t.offset.row || y >= t.offset.row + 224 || x < t.offset.col || x >= t.offset.col + 224) continue;
                ++n;
                for (int k = 0; k < 3; ++k) acc[k] += t.prob.at(k, y - t.offset.row, x - t.offset.col);
            }
            const int expected_n = (y >= 112 && y < 224 ? 2 : 1) * (x >= 112 && x < 224 ? 2 : 1);
            CHECK(n == expected_n);
            double s = 0;
            for (double& a : acc) s += a /= n;
            for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(fused.at(k, y, x) - acc[k] / s));
        }
    }
    CHECK(worst == 0.0);
}

TEST_CASE("fusion is invariant to tile order and rejects bad tiles") {
    Rng rng(8);
    const auto plan = plan_tiles(40, 56, 16, 0.5);
    std::vector<Tile> tiles;
    for (const auto& w : plan.windows) tiles.push_back({w, random_probs(rng, 4, 16, 16)});
    tiles.push_back(tiles[3]);
    tiles.back().prob = random_probs(rng, 4, 16, 16);
    const auto a = fuse_probabilities(tiles, 40, 56);
    auto shuffled = tiles;
    rng.shuffle(std::span(shuffled));
    CHECK(fuse_probabilities(shuffled, 40, 56) == a);

    std::vector<Tile> missing(tiles.begin() + 1, tiles.end() - 1);
    CHECK_THROWS_AS(fuse_probabilities(missing, plan), InvalidArgument);
    std::vector<Tile> off{{{3, 3}, random_probs(rng, 4, 16, 16)}};
    CHECK_THROWS_AS(fuse_probabilities(off, plan), InvalidArgument);
    std::vector<Tile> outside{{{30, 0}, random_probs(rng, 4, 16, 16)}};
    CHECK_THROWS_AS(fuse_probabilities(outside, 40, 56), InvalidArgument);
}

TEST_CASE("dihedral variants agree with the augmentation transforms") {
    Rng rng(9);
    const LabeledImage src{fixtures::random_image(rng, 5, 7), fixtures::random_mask(rng, 5, 7, 4)};
    for (auto v : variants(TtaSet::d4)) {
        LabeledImage expected = v.hflip ? flip_horizontal(src) : src;
        expected = rotate_quarter_turns(expected, v.quarter_turns);
        CHECK(apply(v, src.image) == expected.image);
        CHECK(apply(v, src.mask) == expected.mask);
    }
}

TEST_CASE("TTA expansion: identity, inverse round trip, distinctness") {
    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const int h = static_cast<int>(rng.uniform_int(2, 12));
        const int w = static_cast<int>(rng.uniform_int(2, 12));
        const auto img = fixtures::random_image(rng, h, w);
        const auto expanded = tta_expand(img);
        REQUIRE(expanded.size() == 8);
        CHECK(expanded[0].second == img);
        for (const auto& [v, im] : expanded) {
            CHECK(apply(inverse(v), im) == img);
            CHECK(apply(v, apply(inverse(v), img)) == img);
        }
        for (std::size_t i = 0; i < 8; ++i)
            for (std::size_t j = i + 1; j < 8; ++j) CHECK(expanded[i].second != expanded[j].second);

        Tensor3 t(3, h, w);
        for (double& x : t.values) x = rng.uniform01();
        for (auto v : variants(TtaSet::d4)) CHECK(apply(inverse(v), apply(v, t)) == t);
    }
    CHECK(variants(TtaSet::rot_flip).size() == 6);
    CHECK(variants(TtaSet::none).size() == 1);
    CHECK(parse_tta_set("d4") == TtaSet::d4);
    CHECK_THROWS_AS(parse_tta_set("d8"), InvalidArgument);
}

TEST_CASE("vertical flip appears in the rot_flip set") {
    Rng rng(14);
    const auto img = fixtures::random_image(rng, 4, 6);
    const auto vflipped = flip_vertical(LabeledImage{img, LabelMask(4, 6, 0)}).image;
    bool found = false;
    for (auto v : variants(TtaSet::rot_flip)) found = found || apply(v, img) == vflipped;
    CHECK(found);
}

TEST_CASE("TTA fusion with a constant model, with identical maps, and on symmetric input") {
    Rng rng(11);
    const auto truth = random_probs(rng, 3, 6, 9);
    std::vector<std::pair<DihedralVariant, ProbabilityMap>> preds;
    for (auto v : variants(TtaSet::d4)) preds.emplace_back(v, ProbabilityMap(apply(v, truth)));
    const auto fused = tta_fuse(preds);
    for (std::size_t i = 0; i < truth.values.size(); ++i) CHECK(fused.values[i] == doctest::Approx(truth.values[i]).epsilon(1e-14));
    CHECK(max_channel_sum_error(fused) <= 1e-6);

    auto shuffled = preds;
    rng.shuffle(std::span(shuffled));
    CHECK(tta_fuse(shuffled) == fused);

    std::vector<std::pair<DihedralVariant, ProbabilityMap>> twice{{{0, false}, truth}, {{0, false}, truth}};
    CHECK_THROWS_AS(tta_fuse(twice), InvalidArgument);

    // "model" = per-pixel class from a radially symmetric pattern; fused argmax must be D4-invariant
    const int n = 9;
    ProbabilityMap sym(3, n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double d = std::hypot(y - 4, x - 4);
            sym.at(0, y, x) = 1.0 + std::cos(d);
            sym.at(1, y, x) = 1.0 + std::sin(d);
            sym.at(2, y, x) = 1.0;
        }
    renormalize(sym);
    std::vector<std::pair<DihedralVariant, ProbabilityMap>> sp;
    for (auto v : variants(TtaSet::d4)) sp.emplace_back(v, ProbabilityMap(apply(v, sym)));
    const auto mask = argmax_mask(tta_fuse(sp));
    for (auto v : variants(TtaSet::d4)) CHECK(apply(v, mask) == mask);
}

TEST_CASE("argmax") {
    Rng rng(13);
    const auto uniform = ProbabilityMap(4, 3, 3, 0.25);
    CHECK(argmax_mask(uniform) == LabelMask(3, 3, 0));

    const auto m = fixtures::random_mask(rng, 6, 6, 3);
    ProbabilityMap hot(3, 6, 6, 0.0);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) hot.at(m.at(y, x), y, x) = 1.0;
    CHECK(argmax_mask(hot) == m);

    const auto p = random_probs(rng, 5, 7, 7);
    const auto am = argmax_mask(p);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) {
            int best = 0;
            double bv = -1;
            for (int k = 0; k < 5; ++k)
                if (p.at(k, y, x) > bv) bv = p.at(k, y, x), best = k;
            CHECK(am.at(y, x) == best);
        }
}

TEST_CASE("multiscale fusion and full record fusion") {
    Rng rng(15);
    const auto plans = plan_inference(100, 80, 64, 0.5, kDefaultScales);
    REQUIRE(plans.size() == 3);
    CHECK(plans[0].tiles.height == 75);
    CHECK(plans[0].tiles.width == 60);
    CHECK(plans[0].tiles.window == 60);
    CHECK(plans[2].tiles.height == 125);

    // A constant model: every record predicts the same per-class constant.
    const std::vector<double> dist{0.2, 0.5, 0.3};
    std::vector<TileRecord> records;
    for (const auto& sp : plans) {
        for (const auto& w : sp.tiles.windows) {
            for (auto v : variants(TtaSet::d4)) {
                ProbabilityMap p(3, sp.tiles.window, sp.tiles.window);
                for (int k = 0; k < 3; ++k)
                    for (int i = 0; i < sp.tiles.window * sp.tiles.window; ++i)
                        p.values[static_cast<std::size_t>(k) * p.plane() + i] = dist[static_cast<std::size_t>(k)];
                records.push_back({sp.scale, v, w, p});
            }
        }
    }
    auto fused = fuse_records(records, 100, 80);
    CHECK(fused.height == 100);
    CHECK(fused.width == 80);
    CHECK(max_channel_sum_error(fused) <= 1e-6);
    for (int k = 0; k < 3; ++k) CHECK(fused.at(k, 50, 40) == doctest::Approx(dist[static_cast<std::size_t>(k)]).epsilon(1e-12));
    rng.shuffle(std::span(records));
    CHECK(fuse_records(records, 100, 80) == fused);

    // Real content at a single scale reproduces plain tile fusion.
    const auto full = random_probs(rng, 3, 100, 80);
    const auto plan = plan_tiles(100, 80, 64, 0.5);
    std::vector<Tile> tiles;
    std::vector<TileRecord> single;
    for (const auto& w : plan.windows) {
        tiles.push_back({w, crop(full, w, 64)});
        single.push_back({1.0, {1, true}, w, ProbabilityMap(apply(DihedralVariant{1, true}, crop(full, w, 64)))});
    }
    const auto a = fuse_probabilities(tiles, plan);
    const auto b = fuse_records(single, 100, 80);
    for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] == doctest::Approx(a.values[i]).epsilon(1e-12));
}
