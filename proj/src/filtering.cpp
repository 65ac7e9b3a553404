#include "tissuemix/filtering.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace tissuemix::filtering {

namespace {

constexpr double kMinSpread = 1.0;

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::string at_line(std::size_t line, const std::string& what) {
    return "line " + std::to_string(line) + ": " + what;
}

}  // namespace

void validate(const AuthenticityScore& score) {
    require(std::isfinite(score.p_real) && score.p_real >= 0.0 && score.p_real <= 1.0,
            "score for '" + score.sample_id + "' is outside [0, 1]");
}

bool keep(double p_real, double threshold) { return p_real > threshold; }

std::vector<FilterDecision> apply_filter(std::span<const AuthenticityScore> scores, double threshold) {
    require(std::isfinite(threshold) && threshold >= 0.0 && threshold <= 1.0, "filter threshold must lie in [0, 1]");
    std::vector<FilterDecision> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
        validate(s);
        out.push_back({s.sample_id, s.p_real, keep(s.p_real, threshold)});
    }
    return out;
}

std::vector<AuthenticityScore> parse_scores(std::string_view text) {
    std::vector<AuthenticityScore> out;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        line = trim(line);
        if (line.empty()) continue;

        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            fail(at_line(line_no, "expected exactly two comma-separated fields"));
        }
        const auto id = trim(line.substr(0, comma));
        const auto value = trim(line.substr(comma + 1));
        if (!seen_content) {
            seen_content = true;
            if (id == "sample_id" && value == "p_real") continue;
        }
        if (id.empty()) fail(at_line(line_no, "empty sample_id"));

        double p = 0.0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), p);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            fail(at_line(line_no, "cannot parse score '" + std::string(value) + "'"));
        }
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            fail(at_line(line_no, "score " + std::string(value) + " is outside [0, 1]"));
        }
        const auto [it, inserted] = first_seen.emplace(std::string(id), line_no);
        if (!inserted) {
            fail(at_line(line_no, "duplicate sample_id '" + std::string(id) + "' (first seen on line " +
                                      std::to_string(it->second) + ")"));
        }
        out.push_back({std::string(id), p});
    }
    return out;
}

std::vector<AuthenticityScore> load_external_scores(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open score file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scores(buf.str());
    } catch (const InvalidArgument& e) {
        fail(path.string() + ": " + e.what());
    }
}

std::string format_scores(std::span<const AuthenticityScore> scores) {
    std::string out = "sample_id,p_real\n";
    char buf[64];
    for (const auto& s : scores) {
        validate(s);
        require(!s.sample_id.empty() && s.sample_id.find_first_of(",\n\r") == std::string::npos,
                "sample_id '" + s.sample_id + "' cannot be written to CSV");
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, s.p_real);
        out += s.sample_id;
        out += ',';
        out.append(buf, ptr);
        out += '\n';
    }
    return out;
}

void write_scores(const std::filesystem::path& path, std::span<const AuthenticityScore> scores) {
    const auto text = format_scores(scores);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write score file " + path.string());
    out << text;
    if (!out) throw IoError("failed writing score file " + path.string());
}

ChannelStats channel_stats(const Image& image) {
    validate(image);
    return reference_stats(std::span<const Image>(&image, 1));
}

ChannelStats reference_stats(std::span<const Image> pool) {
    require(!pool.empty(), "reference pool is empty");
    std::array<double, 3> sum{}, sum_sq{};
    double n = 0.0;
    for (const auto& img : pool) {
        validate(img);
        for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = img.pixels[i + c];
                sum[c] += v;
                sum_sq[c] += v * v;
            }
        }
        n += static_cast<double>(img.pixel_count());
    }
    ChannelStats s;
    for (std::size_t c = 0; c < 3; ++c) {
        s.mean[c] = sum[c] / n;
        s.stddev[c] = std::sqrt(std::max(0.0, sum_sq[c] / n - s.mean[c] * s.mean[c]));
    }
    return s;
}

double heuristic_score(const Image& image, const ChannelStats& reference) {
    const auto s = channel_stats(image);
    double d = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double spread = std::max(reference.stddev[c], kMinSpread);
        const double zm = (s.mean[c] - reference.mean[c]) / spread;
        const double zs = (s.stddev[c] - reference.stddev[c]) / spread;
        d += zm * zm + zs * zs;
    }
    return std::exp(-d / 6.0);
}

std::vector<AuthenticityScore> heuristic_score(std::span<const Image> images, std::span<const std::string> ids,
                                               const ChannelStats& reference) {
    require(images.size() == ids.size(), "heuristic_score: image and id counts differ");
    std::vector<AuthenticityScore> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) out.push_back({ids[i], heuristic_score(images[i], reference)});
    return out;
}

}  // namespace tissuemix::filtering
