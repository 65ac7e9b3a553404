#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tissuemix/filtering.hpp"
#include "tissuemix/manifest.hpp"
#include "tissuemix/sample_store.hpp"
#include "tissuemix/synthesis.hpp"

namespace tissuemix::pipeline {

enum class FilterMode { none, external, heuristic };

FilterMode parse_filter_mode(const std::string& name);
std::string to_string(FilterMode mode);

struct SynthOptions {
    SynthesisConfig synthesis;
    Strategy strategy = Strategy::mosaic;
    int count = 1;                 // samples to keep
    int max_attempts = 0;          // 0 means 10 * count
    FilterMode filter = FilterMode::none;
    std::filesystem::path scores;  // for FilterMode::external
    double threshold = filtering::kDefaultThreshold;
    std::vector<std::string> classes;  // eligible source classes by name; empty means all
    bool infer_background = true;      // for mask-less sources
    int reference_pool = 512;          // manifest entries used for heuristic statistics
    int spot_checks = 20;              // samples re-derived from their recipes after the run
    int threads = 1;

    void validate() const;
    int attempt_limit() const { return max_attempts > 0 ? max_attempts : 10 * count; }
};

/// Sample ids are the strategy name and the zero-padded candidate index.
std::string sample_id(Strategy strategy, std::uint64_t candidate);

/// Everything needed to generate candidates from a source manifest.
class Generator {
public:
    Generator(const io::DatasetManifest& manifest, const SynthOptions& options);

    /// Candidate k, a pure function of (global seed, k) and the sources.
    SynthesisResult candidate(std::uint64_t k) const;

    /// Regenerates a sample from its recipe: the recorded sources and seed.
    SynthesisResult replay(const SynthesisRecipe& recipe) const;

    const std::vector<std::size_t>& eligible() const { return eligible_; }
    const io::SourceStore& store() const { return store_; }

private:
    SynthesisResult synthesize(const std::vector<std::size_t>& sources, std::uint64_t seed) const;
    LabeledImage prepare(const LabeledImage& src, int index, std::vector<TransformDescriptor>& notes) const;

    const io::DatasetManifest& manifest_;
    SynthOptions options_;
    io::SourceStore store_;
    std::vector<std::size_t> eligible_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Number of source images one sample draws.
int sources_per_sample(Strategy strategy, const SynthesisConfig& config);

struct SynthSummary {
    std::uint64_t attempts = 0;
    std::uint64_t kept = 0;
    std::uint64_t discarded = 0;
    std::uint64_t unscored = 0;  // external mode: candidates missing from the score file
    int spot_checked = 0;
    bool reached_target = false;
    std::vector<std::string> warnings;
};

/// Generates, filters and writes samples until `count` are kept or the
/// attempt limit is hit. Candidates are generated in parallel but decided
/// and written strictly in index order, so the output does not depend on
/// the thread count. Writes `run.json` describing the run, then re-derives
/// `spot_checks` random samples from their recipes and compares them with
/// what was written.
SynthSummary run_synth(const std::filesystem::path& manifest_path, const SynthOptions& options,
                       const std::filesystem::path& out_dir, std::ostream* log = nullptr);

inline constexpr const char* kRunFileName = "run.json";

nlohmann::ordered_json options_to_json(const SynthOptions& options);
SynthOptions options_from_json(const nlohmann::ordered_json& j);

struct ReplayResult {
    std::string id;
    bool matches = false;
};

/// Re-derives samples of a finished run (all of them when `ids` is empty)
/// and compares them byte for byte with the files on disk.
std::vector<ReplayResult> replay_run(const std::filesystem::path& run_dir, const std::vector<std::string>& ids = {},
                                     int threads = 1);

}  // namespace tissuemix::pipeline
