#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tissuemix/image.hpp"

namespace tissuemix::filtering {

inline constexpr double kDefaultThreshold = 0.5;

struct AuthenticityScore {
    std::string sample_id;
    double p_real = 0.0;

    bool operator==(const AuthenticityScore&) const = default;
};

struct FilterDecision {
    std::string sample_id;
    double p_real = 0.0;
    bool kept = false;

    bool operator==(const FilterDecision&) const = default;
};

/// Throws unless p_real is a finite value in [0, 1].
void validate(const AuthenticityScore& score);

/// The decision rule: strictly greater than the threshold is kept.
bool keep(double p_real, double threshold = kDefaultThreshold);

/// Decides every score in order. Looks at nothing but the scores.
std::vector<FilterDecision> apply_filter(std::span<const AuthenticityScore> scores,
                                         double threshold = kDefaultThreshold);

/// CSV with columns `sample_id,p_real` and an optional header row. Blank lines
/// are skipped and a trailing CR is tolerated. Errors name the 1-based line.
std::vector<AuthenticityScore> parse_scores(std::string_view text);
std::vector<AuthenticityScore> load_external_scores(const std::filesystem::path& path);

/// Writes the header plus one row per score, using shortest round-trip decimals.
std::string format_scores(std::span<const AuthenticityScore> scores);
void write_scores(const std::filesystem::path& path, std::span<const AuthenticityScore> scores);

struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};
};

/// Per-channel mean and population standard deviation over all pixels.
ChannelStats channel_stats(const Image& image);

/// Statistics of the pixels of the whole pool taken together.
ChannelStats reference_stats(std::span<const Image> pool);

// Stand-in scorer for runs without a trained discriminator. It rates how
// typical an image's color statistics are, not whether it looks synthesized.
//   d = mean over channels of ((m - mu) / s)^2 and ((sd - sigma) / s)^2,
//   s = max(sigma, 1), score = exp(-d)
double heuristic_score(const Image& image, const ChannelStats& reference);

std::vector<AuthenticityScore> heuristic_score(std::span<const Image> images, std::span<const std::string> ids,
                                               const ChannelStats& reference);

}  // namespace tissuemix::filtering
