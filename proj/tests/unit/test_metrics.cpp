#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>

#include "fixtures.hpp"
#include "json.hpp"
#include "tissuemix/metrics.hpp"
#include "tissuemix/permutation.hpp"

using namespace tissuemix;
using namespace tissuemix::metrics;

namespace {

LabelMask mask_from(int h, int w, std::vector<std::uint8_t> labels) {
    LabelMask m(h, w, 0);
    m.labels = std::move(labels);
    return m;
}

// Per-pixel IoU oracle: counts intersection and union directly from the masks.
std::vector<std::optional<double>> iou_oracle(const std::vector<std::pair<LabelMask, LabelMask>>& pairs, int C) {
    std::vector<std::optional<double>> out;
    for (int c = 0; c < C; ++c) {
        std::uint64_t inter = 0, uni = 0;
        for (const auto& [pred, gt] : pairs) {
            for (std::size_t i = 0; i < gt.labels.size(); ++i) {
                if (gt.labels[i] == gt.background) continue;
                const bool in_gt = gt.labels[i] == c;
                const bool in_pred = pred.labels[i] == c;
                inter += in_gt && in_pred;
                uni += in_gt || in_pred;
            }
        }
        out.push_back(uni ? std::optional<double>(static_cast<double>(inter) / static_cast<double>(uni)) : std::nullopt);
    }
    return out;
}

// Brute force over all subsets of size na via bitmasks.
double exhaustive_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto n = pooled.size();
    auto mean_diff = [&](unsigned mask) {
        double sa = 0, sb = 0;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? sa : sb) += pooled[i];
        return std::abs(sa / a.size() - sb / b.size());
    };
    const double obs = mean_diff((1u << a.size()) - 1);
    int hits = 0, total = 0;
    for (unsigned m = 0; m < (1u << n); ++m) {
        if (static_cast<std::size_t>(__builtin_popcount(m)) != a.size()) continue;
        ++total;
        hits += mean_diff(m) >= obs - 1e-12;
    }
    return static_cast<double>(hits) / total;
}

}  // namespace

TEST_CASE("toy confusion fixture") {
    const auto gt = mask_from(2, 2, {0, 0, 1, 1});
    const auto pred = mask_from(2, 2, {0, 1, 1, 1});
    const auto cm = accumulate(pred, gt, ConfusionMatrix(2));
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.total() == 4);

    const auto r = compute_report(cm);
    CHECK(*r.per_class_iou[0] == 0.5);
    CHECK(*r.per_class_iou[1] == 2.0 / 3.0);
    CHECK(r.miou == 7.0 / 12.0);
    CHECK(r.fwiou == 7.0 / 12.0);
    CHECK(r.pixel_counts == std::vector<std::uint64_t>{2, 2});
}

TEST_CASE("perfect prediction and single class") {
    Rng rng(1);
    const auto gt = fixtures::random_mask(rng, 8, 8, 4, 0.1);
    const auto r = compute_report(accumulate(gt, gt, ConfusionMatrix(4)));
    for (const auto& v : r.per_class_iou) CHECK(*v == 1.0);
    CHECK(r.miou == 1.0);
    CHECK(r.fwiou == doctest::Approx(1.0).epsilon(1e-15));

    const LabelMask only2(4, 4, 2);
    const auto s = compute_report(accumulate(only2, only2, ConfusionMatrix(4)));
    CHECK_FALSE(s.per_class_iou[0].has_value());
    CHECK(*s.per_class_iou[2] == 1.0);
    CHECK(s.miou == 1.0);
}

TEST_CASE("background exclusion") {
    const LabelMask gt(5, 5, kDefaultBackground);
    Rng rng(2);
    const auto pred = fixtures::random_mask(rng, 5, 5, 3);
    ConfusionMatrix cm(3);
    cm.at(1, 2) = 7;
    const auto before = cm;
    cm.add(pred, gt);
    CHECK(cm == before);
    CHECK_THROWS_AS(compute_report(ConfusionMatrix(3)), InvalidArgument);
}

TEST_CASE("predicted background lands in the reserved column and counts as a miss") {
    const auto gt = mask_from(1, 4, {0, 0, 1, 1});
    const auto pred = mask_from(1, 4, {0, kDefaultBackground, 1, 1});
    const auto cm = accumulate(pred, gt, ConfusionMatrix(2));
    CHECK(cm.predicted_background(0) == 1);
    CHECK(cm.total() == 4);
    const auto r = compute_report(cm);
    CHECK(*r.per_class_iou[0] == 0.5);
    CHECK(*r.per_class_iou[1] == 1.0);
    CHECK(r.predicted_background == 1);
}

TEST_CASE("invalid inputs") {
    CHECK_THROWS_AS(ConfusionMatrix(2).add(LabelMask(2, 2, 0), LabelMask(2, 3, 0)), InvalidArgument);
    CHECK_THROWS_AS(ConfusionMatrix(2).add(LabelMask(2, 2, 4), LabelMask(2, 2, 0)), InvalidArgument);
    CHECK_THROWS_AS(ConfusionMatrix(2).add(LabelMask(2, 2, 0), LabelMask(2, 2, 3)), InvalidArgument);
    ConfusionMatrix a(2);
    CHECK_THROWS_AS(a.merge(ConfusionMatrix(3)), InvalidArgument);
}

TEST_CASE("report matches per-pixel oracle; merge is order independent") {
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const int C = static_cast<int>(rng.uniform_int(2, 6));
        std::vector<std::pair<LabelMask, LabelMask>> pairs;
        const int count = static_cast<int>(rng.uniform_int(1, 5));
        for (int k = 0; k < count; ++k) {
            const int h = static_cast<int>(rng.uniform_int(1, 32));
            const int w = static_cast<int>(rng.uniform_int(1, 32));
            pairs.emplace_back(fixtures::random_mask(rng, h, w, C), fixtures::random_mask(rng, h, w, C, 0.2));
        }
        ConfusionMatrix forward(C);
        for (const auto& [p, g] : pairs) forward.add(p, g);

        auto shuffled = pairs;
        rng.shuffle(std::span(shuffled));
        ConfusionMatrix backward(C);
        for (const auto& [p, g] : shuffled) backward.merge(accumulate(p, g, ConfusionMatrix(C)));
        CHECK(forward == backward);

        const auto want = iou_oracle(pairs, C);
        const auto r1 = compute_report(forward);
        const auto r2 = compute_report(backward);
        CHECK(r1.miou == r2.miou);
        CHECK(r1.fwiou == r2.fwiou);
        for (int c = 0; c < C; ++c) {
            REQUIRE(r1.per_class_iou[static_cast<std::size_t>(c)].has_value() == want[static_cast<std::size_t>(c)].has_value());
            if (want[static_cast<std::size_t>(c)]) CHECK(*r1.per_class_iou[static_cast<std::size_t>(c)] == *want[static_cast<std::size_t>(c)]);
        }
    }
}

TEST_CASE("mIoU equals fwIoU when class frequencies are equal") {
    // two classes with 3 gt pixels each
    const auto gt = mask_from(1, 6, {0, 0, 0, 1, 1, 1});
    const auto pred = mask_from(1, 6, {0, 1, 0, 1, 1, 0});
    const auto r = compute_report(accumulate(pred, gt, ConfusionMatrix(2)));
    CHECK(r.miou == doctest::Approx(r.fwiou).epsilon(1e-15));
}

TEST_CASE("report JSON") {
    const auto only0 = LabelMask(2, 2, 0);
    const auto r = compute_report(accumulate(only0, only0, ConfusionMatrix(2)));
    const std::vector<std::string> names{"tumor", "stroma"};
    const auto j = nlohmann::json::parse(report_to_json(r, names));
    CHECK(j["per_class_iou"][0] == 1.0);
    CHECK(j["per_class_iou"][1].is_null());
    CHECK(j["class_names"][1] == "stroma");
    CHECK(j["total_pixels"] == 4);
}

TEST_CASE("image labels from masks") {
    CHECK(derive_image_labels(LabelMask(3, 3, 0), 4).present == std::vector<bool>{true, false, false, false});
    CHECK(derive_image_labels(LabelMask(3, 3, kDefaultBackground), 4).present == std::vector<bool>(4, false));
    const auto half = mask_from(2, 2, {0, 0, 2, 2});
    CHECK(derive_image_labels(half, 4).present == std::vector<bool>{true, false, true, false});
    CHECK(derive_image_labels(half, 4, 3).present == std::vector<bool>(4, false));
}

TEST_CASE("color background threshold") {
    Image img(1, 3, 0);
    for (int ch = 0; ch < 3; ++ch) {
        img.at(0, 0, ch) = 235;
        img.at(0, 1, ch) = 240;
        img.at(0, 2, ch) = 250;
    }
    img.at(0, 1, 2) = 234;
    CHECK(background_from_color(img) == std::vector<bool>{true, false, true});
    const auto marked = mark_background(LabelMask(1, 3, 1), img);
    CHECK(marked.labels == std::vector<std::uint8_t>{kDefaultBackground, 1, kDefaultBackground});
    CHECK(background_from_color(img, 251) == std::vector<bool>{false, false, false});
}

TEST_CASE("permutation fixtures") {
    const std::vector<double> ones{1, 1}, zeros{0, 0};
    const auto r = permutation_test(ones, zeros);
    CHECK(r.exact);
    CHECK(r.permutations == 6);
    CHECK(r.p_value == 2.0 / 6.0);
    CHECK(r.statistic == 1.0);

    const std::vector<double> a{0.71, 0.69, 0.74, 0.7};
    CHECK(permutation_test(a, a).p_value == 1.0);
    CHECK_THROWS_AS(permutation_test(std::vector<double>{}, a), InvalidArgument);
}

TEST_CASE("exhaustive mode agrees with brute-force subsets") {
    Rng rng(40);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<double> a, b;
        const auto na = rng.uniform_int(1, 6), nb = rng.uniform_int(1, 6);
        for (int i = 0; i < na; ++i) a.push_back(std::round(rng.uniform(0, 10)) / 10);
        for (int i = 0; i < nb; ++i) b.push_back(std::round(rng.uniform(0, 10)) / 10);
        const auto r = permutation_test(a, b);
        CHECK(r.exact);
        CHECK(r.p_value == doctest::Approx(exhaustive_oracle(a, b)).epsilon(1e-15));
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
        CHECK(permutation_test(a, b).p_value == r.p_value);
    }
}

TEST_CASE("Monte Carlo agrees with exhaustive and is seed-deterministic") {
    const std::vector<double> a{0.762, 0.771, 0.758, 0.769, 0.775};
    const std::vector<double> b{0.751, 0.766, 0.749, 0.760, 0.757};
    const auto exact = permutation_test(a, b);
    REQUIRE(exact.exact);
    PermutationOptions mc{0, 100'000, 7};
    const auto approx = permutation_test(a, b, mc);
    CHECK_FALSE(approx.exact);
    CHECK(approx.permutations == 100'001);
    CHECK(std::abs(approx.p_value - exact.p_value) <= 0.02);
    CHECK(permutation_test(a, b, mc).p_value == approx.p_value);
    mc.mc_iters = 9;
    const std::vector<double> far_a{100, 101}, far_b{0, 1};
    const auto small = permutation_test(far_a, far_b, mc);
    CHECK(small.p_value >= 1.0 / 10.0);
}

TEST_CASE("binomial") {
    CHECK(binomial(4, 2) == 6);
    CHECK(binomial(10, 5) == 252);
    CHECK(binomial(5, 7) == 0);
    CHECK(binomial(60, 30) == 118264581564861424ULL);
    CHECK(binomial(200, 100) == UINT64_MAX);
}
