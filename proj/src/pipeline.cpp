#include "tissuemix/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "tissuemix/parallel.hpp"
#include "tissuemix/png_io.hpp"
#include "tissuemix/resample.hpp"

namespace tissuemix::pipeline {

using nlohmann::ordered_json;

namespace {

// Seed streams below a candidate's seed.
constexpr std::uint64_t kSelectionStream = 0;
constexpr std::uint64_t kSynthesisStream = 1;
// Stream below the global seed that picks spot-check samples.
constexpr std::uint64_t kSpotCheckStream = 0xFFFF'FFFF'FFFF'FFFFull;

ordered_json policy_to_json(const AugmentPolicy& p) {
    ordered_json j;
    j["hflip_prob"] = p.hflip_prob;
    j["vflip_prob"] = p.vflip_prob;
    j["max_shift_frac"] = p.max_shift_frac;
    j["scale_min"] = p.scale_min;
    j["scale_max"] = p.scale_max;
    j["right_angle_rotation"] = p.right_angle_rotation;
    j["max_rotation_deg"] = p.max_rotation_deg;
    j["crop_height"] = p.crop_height;
    j["crop_width"] = p.crop_width;
    return j;
}

AugmentPolicy policy_from_json(const ordered_json& j) {
    AugmentPolicy p;
    p.hflip_prob = j.at("hflip_prob").get<double>();
    p.vflip_prob = j.at("vflip_prob").get<double>();
    p.max_shift_frac = j.at("max_shift_frac").get<double>();
    p.scale_min = j.at("scale_min").get<double>();
    p.scale_max = j.at("scale_max").get<double>();
    p.right_angle_rotation = j.at("right_angle_rotation").get<bool>();
    p.max_rotation_deg = j.at("max_rotation_deg").get<double>();
    p.crop_height = j.at("crop_height").get<int>();
    p.crop_width = j.at("crop_width").get<int>();
    return p;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool matches_disk(const LabeledImage& sample, const std::filesystem::path& dir, const io::ManifestEntry& e,
                  int num_classes) {
    if (!e.mask) return false;
    return io::read_image(dir / e.image) == sample.image && io::read_mask(dir / *e.mask, num_classes) == sample.mask;
}

}  // namespace

FilterMode parse_filter_mode(const std::string& name) {
    if (name == "none") return FilterMode::none;
    if (name == "external") return FilterMode::external;
    if (name == "heuristic") return FilterMode::heuristic;
    fail("unknown filter '" + name + "' (expected none, external or heuristic)");
}

std::string to_string(FilterMode mode) {
    switch (mode) {
        case FilterMode::none: return "none";
        case FilterMode::external: return "external";
        case FilterMode::heuristic: return "heuristic";
    }
    return "none";
}

void SynthOptions::validate() const {
    synthesis.validate();
    require(count > 0, "count must be positive");
    require(max_attempts >= 0, "max_attempts must not be negative");
    require(attempt_limit() >= count, "max_attempts is smaller than count");
    require(std::isfinite(threshold) && threshold >= 0.0 && threshold <= 1.0, "threshold must lie in [0, 1]");
    require(filter != FilterMode::external || !scores.empty(), "external filtering needs a score file");
    require(reference_pool > 0, "reference_pool must be positive");
    require(spot_checks >= 0, "spot_checks must not be negative");
    require(threads > 0, "threads must be positive");
}

std::string sample_id(Strategy strategy, std::uint64_t candidate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06llu", static_cast<unsigned long long>(candidate));
    return to_string(strategy) + buf;
}

int sources_per_sample(Strategy strategy, const SynthesisConfig& config) {
    return strategy == Strategy::mosaic ? 4 * config.tiles_per_grid() : 2;
}

Generator::Generator(const io::DatasetManifest& manifest, const SynthOptions& options)
    : manifest_(manifest), options_(options), store_(manifest, options.infer_background) {
    options_.validate();
    io::validate(manifest_);
    std::vector<bool> allowed(manifest_.class_names.size(), options_.classes.empty());
    for (const auto& name : options_.classes) {
        const auto it = std::find(manifest_.class_names.begin(), manifest_.class_names.end(), name);
        require(it != manifest_.class_names.end(), "unknown class '" + name + "'");
        allowed[static_cast<std::size_t>(it - manifest_.class_names.begin())] = true;
    }
    const auto pool = io::index_single_label(manifest_);
    for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
        by_id_.emplace(manifest_.entries[i].id, i);
        const int c = io::single_label_of(manifest_.entries[i]);
        if (c >= 0 && allowed[static_cast<std::size_t>(c)]) eligible_.push_back(i);
    }
    require(!eligible_.empty(), "no single-label source images in the eligible classes");
}

LabeledImage Generator::prepare(const LabeledImage& src, int index, std::vector<TransformDescriptor>& notes) const {
    const auto& cfg = options_.synthesis;
    int h = src.image.height, w = src.image.width;
    if (options_.strategy == Strategy::bezier) {
        h = cfg.out_height;
        w = cfg.out_width;
    } else {
        const int m = cfg.grid_order;
        h = std::max(h, (cfg.out_height + m - 1) / m);
        w = std::max(w, (cfg.out_width + m - 1) / m);
    }
    if (h == src.image.height && w == src.image.width) return src;
    notes.push_back({"resize", index, {{"height", h}, {"width", w}}});
    return {resize_bilinear(src.image, h, w), resize_nearest(src.mask, h, w)};
}

SynthesisResult Generator::synthesize(const std::vector<std::size_t>& sources, std::uint64_t seed) const {
    std::vector<std::shared_ptr<const LabeledImage>> loaded;
    std::vector<LabeledImage> prepared;
    std::vector<TransformDescriptor> notes;
    SynthesisRecipe recipe;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        loaded.push_back(store_.load(sources[i]));
        prepared.push_back(prepare(*loaded.back(), static_cast<int>(i), notes));
        recipe.source_ids.push_back(manifest_.entries[sources[i]].id);
    }
    Rng rng(derive_seed(seed, kSynthesisStream));
    auto out = options_.strategy == Strategy::mosaic
                   ? mosaic_from_tiles(prepared, options_.synthesis, rng)
                   : bezier_synthesize(prepared[0], prepared[1], options_.synthesis, rng);
    notes.insert(notes.end(), out.recipe.augmentations.begin(), out.recipe.augmentations.end());
    out.recipe.augmentations = std::move(notes);
    out.recipe.source_ids = std::move(recipe.source_ids);
    out.recipe.seed = seed;
    return out;
}

SynthesisResult Generator::candidate(std::uint64_t k) const {
    const std::uint64_t seed = derive_seed(options_.synthesis.seed, k);
    Rng pick(derive_seed(seed, kSelectionStream));
    const int n = sources_per_sample(options_.strategy, options_.synthesis);
    std::vector<std::size_t> sources;
    for (int i = 0; i < n; ++i) {
        sources.push_back(eligible_[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(eligible_.size()) - 1))]);
    }
    return synthesize(sources, seed);
}

SynthesisResult Generator::replay(const SynthesisRecipe& recipe) const {
    recipe.validate();
    require(recipe.strategy == options_.strategy, "recipe strategy does not match the run");
    require(static_cast<int>(recipe.source_ids.size()) == sources_per_sample(options_.strategy, options_.synthesis),
            "recipe lists the wrong number of sources");
    std::vector<std::size_t> sources;
    for (const auto& id : recipe.source_ids) {
        const auto it = by_id_.find(id);
        require(it != by_id_.end(), "recipe source '" + id + "' is not in the source manifest");
        sources.push_back(it->second);
    }
    return synthesize(sources, recipe.seed);
}

ordered_json options_to_json(const SynthOptions& o) {
    ordered_json s;
    s["out_height"] = o.synthesis.out_height;
    s["out_width"] = o.synthesis.out_width;
    s["alpha"] = o.synthesis.alpha;
    s["beta"] = o.synthesis.beta;
    s["grid_order"] = o.synthesis.grid_order;
    s["bezier_anchors"] = o.synthesis.bezier_anchors;
    s["samples_per_segment"] = o.synthesis.samples_per_segment;
    s["seed"] = o.synthesis.seed;
    s["grid_policy"] = policy_to_json(o.synthesis.grid_policy);

    ordered_json j;
    j["strategy"] = to_string(o.strategy);
    j["count"] = o.count;
    j["max_attempts"] = o.attempt_limit();
    j["filter"] = to_string(o.filter);
    j["scores"] = o.scores.string();
    j["threshold"] = o.threshold;
    j["classes"] = o.classes;
    j["infer_background"] = o.infer_background;
    j["reference_pool"] = o.reference_pool;
    j["spot_checks"] = o.spot_checks;
    j["synthesis"] = s;
    return j;
}

SynthOptions options_from_json(const ordered_json& j) {
    SynthOptions o;
    const auto& s = j.at("synthesis");
    o.synthesis.out_height = s.at("out_height").get<int>();
    o.synthesis.out_width = s.at("out_width").get<int>();
    o.synthesis.alpha = s.at("alpha").get<double>();
    o.synthesis.beta = s.at("beta").get<double>();
    o.synthesis.grid_order = s.at("grid_order").get<int>();
    o.synthesis.bezier_anchors = s.at("bezier_anchors").get<int>();
    o.synthesis.samples_per_segment = s.at("samples_per_segment").get<int>();
    o.synthesis.seed = s.at("seed").get<std::uint64_t>();
    o.synthesis.grid_policy = policy_from_json(s.at("grid_policy"));
    o.strategy = parse_strategy(j.at("strategy").get<std::string>());
    o.count = j.at("count").get<int>();
    o.max_attempts = j.at("max_attempts").get<int>();
    o.filter = parse_filter_mode(j.at("filter").get<std::string>());
    o.scores = j.at("scores").get<std::string>();
    o.threshold = j.at("threshold").get<double>();
    o.classes = j.at("classes").get<std::vector<std::string>>();
    o.infer_background = j.at("infer_background").get<bool>();
    o.reference_pool = j.at("reference_pool").get<int>();
    o.spot_checks = j.at("spot_checks").get<int>();
    return o;
}

SynthSummary run_synth(const std::filesystem::path& manifest_path, const SynthOptions& options,
                       const std::filesystem::path& out_dir, std::ostream* log) {
    options.validate();
    const auto manifest_abs = std::filesystem::absolute(manifest_path).lexically_normal();
    const auto manifest = io::read_manifest(manifest_abs);
    const Generator gen(manifest, options);
    SynthSummary summary;
    for (const auto& w : io::index_single_label(manifest).warnings) summary.warnings.push_back(w);

    std::unordered_map<std::string, double> external;
    if (options.filter == FilterMode::external) {
        for (const auto& s : filtering::load_external_scores(options.scores)) external.emplace(s.sample_id, s.p_real);
    }
    filtering::ChannelStats reference;
    if (options.filter == FilterMode::heuristic) {
        std::vector<Image> pool;
        const auto n = std::min<std::size_t>(static_cast<std::size_t>(options.reference_pool), manifest.entries.size());
        require(n > 0, "heuristic filtering needs at least one manifest image");
        for (std::size_t i = 0; i < n; ++i) pool.push_back(io::read_image(manifest.resolve(manifest.entries[i].image)));
        reference = filtering::reference_stats(pool);
    }

    io::SampleWriter writer(out_dir, manifest.class_names, manifest.background_index);
    std::vector<std::string> kept_ids;
    const auto limit = static_cast<std::uint64_t>(options.attempt_limit());
    const auto batch_size = static_cast<std::uint64_t>(std::max(16, options.threads * 8));

    struct Candidate {
        SynthesisResult result;
        double heuristic = 0.0;
    };
    std::uint64_t next = 0;
    while (summary.kept < static_cast<std::uint64_t>(options.count) && next < limit) {
        // Never generate more than could still be kept in this batch.
        const auto need = static_cast<std::uint64_t>(options.count) - summary.kept;
        const auto n = std::min({batch_size, limit - next, options.filter == FilterMode::none ? need : batch_size});
        std::vector<Candidate> batch(n);
        parallel_for(n, options.threads, [&](std::size_t i) {
            batch[i].result = gen.candidate(next + i);
            if (options.filter == FilterMode::heuristic) {
                batch[i].heuristic = filtering::heuristic_score(batch[i].result.sample.image, reference);
            }
        });
        for (std::uint64_t i = 0; i < n && summary.kept < static_cast<std::uint64_t>(options.count); ++i) {
            const std::uint64_t k = next + i;
            const auto id = sample_id(options.strategy, k);
            ++summary.attempts;
            bool keep = true;
            if (options.filter == FilterMode::external) {
                const auto it = external.find(id);
                if (it == external.end()) {
                    ++summary.unscored;
                    keep = false;
                } else {
                    keep = filtering::keep(it->second, options.threshold);
                }
            } else if (options.filter == FilterMode::heuristic) {
                keep = filtering::keep(batch[i].heuristic, options.threshold);
            }
            if (!keep) {
                ++summary.discarded;
                continue;
            }
            writer.write(id, batch[i].result.sample, batch[i].result.recipe);
            kept_ids.push_back(id);
            ++summary.kept;
        }
        next += n;
        if (log) {
            *log << "synth: " << summary.attempts << " attempts, " << summary.kept << "/" << options.count << " kept\n";
        }
    }
    summary.reached_target = summary.kept == static_cast<std::uint64_t>(options.count);

    ordered_json run;
    run["source_manifest"] = manifest_abs.string();
    run["options"] = options_to_json(options);
    run["summary"] = {{"attempts", summary.attempts},
                      {"kept", summary.kept},
                      {"discarded", summary.discarded},
                      {"unscored", summary.unscored},
                      {"reached_target", summary.reached_target}};
    {
        std::ofstream f(out_dir / kRunFileName, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + (out_dir / kRunFileName).string());
        f << run.dump(2) << '\n';
    }

    // Spot check: a seeded random subset, re-derived from the recipes on disk.
    Rng pick(derive_seed(options.synthesis.seed, kSpotCheckStream));
    pick.shuffle(std::span<std::string>(kept_ids));
    const auto checks = std::min<std::size_t>(static_cast<std::size_t>(options.spot_checks), kept_ids.size());
    std::vector<char> ok(checks, 0);
    parallel_for(checks, options.threads, [&](std::size_t i) {
        const auto& id = kept_ids[i];
        const auto replayed = gen.replay(io::read_recipe(out_dir / io::recipe_file_name(id)));
        io::ManifestEntry e{id, id + ".png", id + "_mask.png", {}};
        ok[i] = matches_disk(replayed.sample, out_dir, e, manifest.num_classes());
    });
    for (std::size_t i = 0; i < checks; ++i) {
        if (!ok[i]) throw std::runtime_error("spot check failed: '" + kept_ids[i] + "' does not match its recipe");
    }
    summary.spot_checked = static_cast<int>(checks);
    return summary;
}

std::vector<ReplayResult> replay_run(const std::filesystem::path& run_dir, const std::vector<std::string>& ids,
                                     int threads) {
    ordered_json run;
    try {
        run = ordered_json::parse(read_text(run_dir / kRunFileName));
    } catch (const nlohmann::json::exception& e) {
        fail((run_dir / kRunFileName).string() + ": " + e.what());
    }
    const auto source = io::read_manifest(run.at("source_manifest").get<std::string>());
    SynthOptions options = options_from_json(run.at("options"));
    if (options.filter == FilterMode::external) options.scores = "unused";  // replay never filters
    const Generator gen(source, options);
    const auto out = io::read_manifest(run_dir / io::kManifestName);

    std::vector<const io::ManifestEntry*> targets;
    if (ids.empty()) {
        for (const auto& e : out.entries) targets.push_back(&e);
    } else {
        for (const auto& id : ids) {
            const auto it = std::find_if(out.entries.begin(), out.entries.end(), [&](const auto& e) { return e.id == id; });
            require(it != out.entries.end(), "sample '" + id + "' is not part of " + run_dir.string());
            targets.push_back(&*it);
        }
    }
    std::vector<ReplayResult> results(targets.size());
    parallel_for(targets.size(), threads, [&](std::size_t i) {
        const auto& e = *targets[i];
        const auto replayed = gen.replay(io::read_recipe(run_dir / io::recipe_file_name(e.id)));
        results[i] = {e.id, matches_disk(replayed.sample, run_dir, e, out.num_classes())};
    });
    return results;
}

}  // namespace tissuemix::pipeline
