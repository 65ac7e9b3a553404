#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "dataset_fixture.hpp"
#include "tissuemix/pipeline.hpp"
#include "tissuemix/sample_store.hpp"

using namespace tissuemix;
using namespace tissuemix::pipeline;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

SynthOptions small_options(Strategy s, int count, std::uint64_t seed = 7) {
    SynthOptions o;
    o.strategy = s;
    o.count = count;
    o.synthesis.seed = seed;
    o.synthesis.out_height = 64;
    o.synthesis.out_width = 64;
    o.spot_checks = 5;
    return o;
}

std::string scores_csv(Strategy s, int n, double p) {
    std::ostringstream out;
    out << "sample_id,p_real\n";
    for (int k = 0; k < n; ++k) out << sample_id(s, static_cast<std::uint64_t>(k)) << "," << p << "\n";
    return out.str();
}

}  // namespace

TEST_CASE("sample ids and source counts") {
    CHECK(sample_id(Strategy::mosaic, 12) == "mosaic_000012");
    CHECK(sample_id(Strategy::bezier, 1234567) == "bezier_1234567");
    SynthesisConfig cfg;
    CHECK(sources_per_sample(Strategy::mosaic, cfg) == 16);
    CHECK(sources_per_sample(Strategy::bezier, cfg) == 2);
    cfg.grid_order = 3;
    CHECK(sources_per_sample(Strategy::mosaic, cfg) == 36);
}

TEST_CASE("option validation") {
    auto o = small_options(Strategy::mosaic, 1);
    CHECK_NOTHROW(o.validate());
    CHECK(o.attempt_limit() == 10);
    o.count = 0;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    o = small_options(Strategy::mosaic, 1);
    o.filter = FilterMode::external;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);  // no score file
    o = small_options(Strategy::mosaic, 1);
    o.threshold = 1.5;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    o = small_options(Strategy::mosaic, 1);
    o.threads = 0;
    CHECK_THROWS_AS(o.validate(), InvalidArgument);
    CHECK_THROWS_AS(parse_filter_mode("strict"), InvalidArgument);
    CHECK(parse_filter_mode(to_string(FilterMode::heuristic)) == FilterMode::heuristic);
}

TEST_CASE("options survive the run file") {
    auto o = small_options(Strategy::bezier, 9, 123456789012345ULL);
    o.filter = FilterMode::heuristic;
    o.threshold = 0.25;
    o.classes = {"tumor"};
    o.synthesis.grid_policy.hflip_prob = 0.1;
    o.synthesis.bezier_anchors = 5;
    const auto back = options_from_json(options_to_json(o));
    CHECK(options_to_json(back) == options_to_json(o));
    CHECK(back.synthesis.seed == 123456789012345ULL);
    CHECK(back.synthesis.grid_policy.hflip_prob == 0.1);
}

TEST_CASE("candidates are pure functions of the seed and index") {
    TempDir dir("gen");
    const auto manifest = io::read_manifest(fixtures::write_dataset(dir.path(), {}));
    for (auto s : {Strategy::mosaic, Strategy::bezier}) {
        const Generator a(manifest, small_options(s, 1));
        const Generator b(manifest, small_options(s, 1));
        const auto a5 = a.candidate(5);
        (void)b.candidate(3);
        CHECK(b.candidate(5).sample == a5.sample);
        CHECK(b.candidate(5).recipe == a5.recipe);
        CHECK(a.candidate(6).sample != a5.sample);
        CHECK(a.replay(a5.recipe).sample == a5.sample);
        CHECK(a5.recipe.source_ids.size() == static_cast<std::size_t>(sources_per_sample(s, {})));
        const Generator other(manifest, small_options(s, 1, 8));
        CHECK(other.candidate(5).sample != a5.sample);
    }
}

TEST_CASE("class restriction limits the sources") {
    TempDir dir("classes");
    const auto manifest = io::read_manifest(fixtures::write_dataset(dir.path(), {}));
    auto o = small_options(Strategy::bezier, 1);
    o.classes = {"stroma"};
    const Generator g(manifest, o);
    CHECK(g.eligible().size() == 6);
    for (std::uint64_t k = 0; k < 5; ++k) {
        for (const auto v : g.candidate(k).sample.mask.labels) CHECK((v == 1 || v == kDefaultBackground));
    }
    o.classes = {"fat"};
    CHECK_THROWS_AS(Generator(manifest, o), InvalidArgument);
}

TEST_CASE("multi-label entries are never sources") {
    TempDir dir("multi");
    fixtures::DatasetLayout layout;
    layout.masks = false;
    layout.multi_label = 3;
    const auto manifest = io::read_manifest(fixtures::write_dataset(dir.path(), layout));
    const Generator g(manifest, small_options(Strategy::mosaic, 1));
    CHECK(g.eligible().size() == 18);
    for (std::uint64_t k = 0; k < 4; ++k)
        for (const auto& id : g.candidate(k).recipe.source_ids) CHECK(id.rfind("mixed_", 0) != 0);
}

TEST_CASE("runs are byte-identical across repeats and thread counts") {
    TempDir dir("det");
    const auto manifest = fixtures::write_dataset(dir / "src", {});
    for (auto s : {Strategy::mosaic, Strategy::bezier}) {
        auto o = small_options(s, 12);
        o.filter = FilterMode::heuristic;
        o.threshold = 0.2;
        const auto name = to_string(s);
        o.threads = 1;
        const auto one = run_synth(manifest, o, dir / (name + "_a"));
        const auto again = run_synth(manifest, o, dir / (name + "_b"));
        o.threads = 8;
        const auto eight = run_synth(manifest, o, dir / (name + "_c"));
        CHECK(one.reached_target);
        CHECK(one.attempts == eight.attempts);
        CHECK(one.spot_checked == 5);
        const auto ta = fixtures::tree(dir / (name + "_a"));
        CHECK(ta.size() == 12 * 3 + 2);
        CHECK(ta == fixtures::tree(dir / (name + "_b")));
        CHECK(ta == fixtures::tree(dir / (name + "_c")));
        (void)again;
    }
}

TEST_CASE("external scores are applied by sample id with a strict threshold") {
    TempDir dir("ext");
    const auto manifest = fixtures::write_dataset(dir / "src", {});
    std::ostringstream csv;
    csv << "sample_id,p_real\n";
    // Every third candidate is real enough; candidate 4 sits on the threshold.
    for (int k = 0; k < 30; ++k) {
        const double p = k == 4 ? 0.5 : (k % 3 == 0 ? 0.9 : 0.1);
        csv << sample_id(Strategy::mosaic, static_cast<std::uint64_t>(k)) << "," << p << "\n";
    }
    fixtures::write_text(dir / "s.csv", csv.str());
    auto o = small_options(Strategy::mosaic, 4);
    o.filter = FilterMode::external;
    o.scores = dir / "s.csv";
    const auto summary = run_synth(manifest, o, dir / "out");
    CHECK(summary.reached_target);
    CHECK(summary.kept == 4);
    CHECK(summary.attempts == 10);  // candidates 0, 3, 6, 9
    CHECK(summary.discarded == 6);
    const auto out = io::read_manifest(dir / "out" / io::kManifestName);
    REQUIRE(out.entries.size() == 4);
    CHECK(out.entries[0].id == "mosaic_000000");
    CHECK(out.entries[1].id == "mosaic_000003");
    CHECK(out.entries[3].id == "mosaic_000009");
}

TEST_CASE("unreachable target leaves partial output and reports it") {
    TempDir dir("miss");
    const auto manifest = fixtures::write_dataset(dir / "src", {});
    fixtures::write_text(dir / "s.csv", scores_csv(Strategy::bezier, 50, 0.4));
    auto o = small_options(Strategy::bezier, 3);
    o.filter = FilterMode::external;
    o.scores = dir / "s.csv";
    o.max_attempts = 20;
    const auto summary = run_synth(manifest, o, dir / "out");
    CHECK_FALSE(summary.reached_target);
    CHECK(summary.kept == 0);
    CHECK(summary.attempts == 20);
    CHECK(summary.discarded == 20);
    CHECK(fs::exists(dir / "out" / kRunFileName));
    CHECK(io::read_manifest(dir / "out" / io::kManifestName).entries.empty());
}

TEST_CASE("candidates missing from the score file count as unscored and are discarded") {
    TempDir dir("unscored");
    const auto manifest = fixtures::write_dataset(dir / "src", {});
    fixtures::write_text(dir / "s.csv", scores_csv(Strategy::mosaic, 2, 0.9));
    auto o = small_options(Strategy::mosaic, 3);
    o.filter = FilterMode::external;
    o.scores = dir / "s.csv";
    o.max_attempts = 6;
    const auto summary = run_synth(manifest, o, dir / "out");
    CHECK(summary.kept == 2);
    CHECK(summary.unscored == 4);
    CHECK_FALSE(summary.reached_target);
}

TEST_CASE("replay re-derives written samples and notices tampering") {
    TempDir dir("replay");
    fixtures::DatasetLayout layout;
    layout.masks = false;
    const auto manifest = fixtures::write_dataset(dir / "src", layout);
    const auto summary = run_synth(manifest, small_options(Strategy::bezier, 6), dir / "out");
    CHECK(summary.reached_target);
    auto results = replay_run(dir / "out", {}, 2);
    REQUIRE(results.size() == 6);
    for (const auto& r : results) CHECK(r.matches);

    // Flip one pixel of one sample.
    auto img = io::read_image(dir / "out" / "bezier_000002.png");
    img.pixels[0] ^= 1;
    io::write_image(dir / "out" / "bezier_000002.png", img);
    results = replay_run(dir / "out", {"bezier_000001", "bezier_000002"});
    REQUIRE(results.size() == 2);
    CHECK(results[0].matches);
    CHECK_FALSE(results[1].matches);
    CHECK_THROWS_AS(replay_run(dir / "out", {"bezier_999999"}), InvalidArgument);
    CHECK_THROWS_AS(replay_run(dir / "nowhere"), IoError);
}

TEST_CASE("existing output is never overwritten") {
    TempDir dir("exists");
    const auto manifest = fixtures::write_dataset(dir / "src", {});
    run_synth(manifest, small_options(Strategy::mosaic, 1), dir / "out");
    CHECK_THROWS_AS(run_synth(manifest, small_options(Strategy::mosaic, 1), dir / "out"), IoError);
}

TEST_CASE("sources of other sizes are resized and the recipe says so") {
    TempDir dir("resize");
    fixtures::DatasetLayout layout;
    layout.height = 40;
    layout.width = 52;
    const auto manifest = io::read_manifest(fixtures::write_dataset(dir.path(), layout));
    const Generator g(manifest, small_options(Strategy::bezier, 1));
    const auto r = g.candidate(0);
    CHECK(r.sample.image.height == 64);
    CHECK(r.sample.image.width == 64);
    bool resized = false;
    for (const auto& t : r.recipe.augmentations) resized = resized || t.op == "resize";
    CHECK(resized);
    CHECK(g.replay(r.recipe).sample == r.sample);
}
