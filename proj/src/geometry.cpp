#include "tissuemix/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tissuemix/error.hpp"

namespace tissuemix::geometry {

namespace {

void check_parameter(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw DomainError("curve parameter t=" + std::to_string(t) + " is outside [0, 1]");
    }
}

// Integer power with 0^0 == 1.
double ipow(double base, int exp) {
    double r = 1.0;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

Point2 eval_bezier(std::span<const Point2> ctrl, double t) {
    check_parameter(t);
    require(!ctrl.empty(), "eval_bezier: no control points");
    const int n = static_cast<int>(ctrl.size()) - 1;
    Point2 out{};
    for (int k = 0; k <= n; ++k) {
        const double w = binomial(n, k) * ipow(t, k) * ipow(1.0 - t, n - k);
        out = out + w * ctrl[static_cast<std::size_t>(k)];
    }
    return out;
}

Point2 eval_cubic_bezier(const BezierSegment& seg, double t) {
    check_parameter(t);
    const double s = 1.0 - t;
    const double b0 = s * s * s;
    const double b1 = 3.0 * t * s * s;
    const double b2 = 3.0 * t * t * s;
    const double b3 = t * t * t;
    return {b0 * seg.p0.x + b1 * seg.p1.x + b2 * seg.p2.x + b3 * seg.p3.x,
            b0 * seg.p0.y + b1 * seg.p1.y + b2 * seg.p2.y + b3 * seg.p3.y};
}

Vec2 eval_cubic_bezier_derivative(const BezierSegment& seg, double t) {
    check_parameter(t);
    const double s = 1.0 - t;
    const Vec2 d0 = seg.p1 - seg.p0;
    const Vec2 d1 = seg.p2 - seg.p1;
    const Vec2 d2 = seg.p3 - seg.p2;
    return 3.0 * ((s * s) * d0 + (2.0 * t * s) * d1 + (t * t) * d2);
}

BezierLoop::BezierLoop(std::vector<Point2> anchors, std::vector<Vec2> tangents)
    : anchors_(std::move(anchors)), tangents_(std::move(tangents)) {
    require(anchors_.size() == tangents_.size(),
            "build_closed_loop: " + std::to_string(anchors_.size()) + " anchors but " +
                std::to_string(tangents_.size()) + " tangents");
    require(anchors_.size() >= 3, "build_closed_loop: need at least 3 anchors");
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        require(std::isfinite(anchors_[i].x) && std::isfinite(anchors_[i].y) &&
                    std::isfinite(tangents_[i].x) && std::isfinite(tangents_[i].y),
                "build_closed_loop: non-finite coordinate");
    }
    const std::size_t n = anchors_.size();
    segments_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        segments_.push_back({anchors_[i], anchors_[i] + tangents_[i], anchors_[j] - tangents_[j], anchors_[j]});
    }
}

double BezierLoop::c1_residual() const {
    double worst = 0.0;
    const std::size_t n = segments_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 end = eval_cubic_bezier_derivative(segments_[i], 1.0);
        const Vec2 start = eval_cubic_bezier_derivative(segments_[(i + 1) % n], 0.0);
        worst = std::max(worst, norm(end - start));
    }
    return worst;
}

std::vector<Point2> BezierLoop::polygonize(int samples_per_segment) const {
    require(samples_per_segment >= 2, "samples_per_segment must be >= 2");
    std::vector<Point2> out;
    out.reserve(segments_.size() * static_cast<std::size_t>(samples_per_segment));
    for (const auto& seg : segments_) {
        for (int j = 0; j < samples_per_segment; ++j) {
            out.push_back(eval_cubic_bezier(seg, static_cast<double>(j) / samples_per_segment));
        }
    }
    return out;
}

BezierLoop build_closed_loop(std::vector<Point2> anchors, std::vector<Vec2> tangents) {
    return BezierLoop(std::move(anchors), std::move(tangents));
}

std::vector<Point2> sample_anchor_ring(Rng& rng, int n) {
    require(n >= 3, "sample_anchor_ring: n must be >= 3, got " + std::to_string(n));
    require(n <= 64, "sample_anchor_ring: n must be <= 64, got " + std::to_string(n));
    constexpr int kMaxTries = 10000;
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(n));
    while (static_cast<int>(pts.size()) < n) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
            const Point2 p{rng.uniform01(), rng.uniform01()};
            placed = std::all_of(pts.begin(), pts.end(),
                                 [&](const Point2& q) { return norm(p - q) >= kMinAnchorSeparation; });
            if (placed) pts.push_back(p);
        }
        if (!placed) pts.clear();  // jammed; start over
    }

    Point2 c{};
    for (const auto& p : pts) c = c + p;
    c = (1.0 / n) * c;
    std::vector<std::pair<double, Point2>> keyed;
    keyed.reserve(pts.size());
    for (const auto& p : pts) keyed.emplace_back(std::atan2(p.y - c.y, p.x - c.x), p);
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = keyed[i].second;
    return pts;
}

std::vector<Vec2> sample_tangents(Rng& rng, std::span<const Point2> anchors) {
    const std::size_t n = anchors.size();
    require(n >= 3, "sample_tangents: need at least 3 anchors");
    Point2 c{};
    double spacing = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c = c + anchors[i];
        spacing += norm(anchors[(i + 1) % n] - anchors[i]);
    }
    c = (1.0 / static_cast<double>(n)) * c;
    spacing /= static_cast<double>(n);

    constexpr double kMaxJitter = 30.0 * std::numbers::pi / 180.0;
    std::vector<Vec2> out;
    out.reserve(n);
    for (const auto& a : anchors) {
        Vec2 dir = a - c;
        const double len = norm(dir);
        dir = len > 0.0 ? (1.0 / len) * dir : Vec2{1.0, 0.0};
        const double angle = rng.uniform(-kMaxJitter, kMaxJitter);
        const double magnitude = rng.uniform(0.1, 0.5) * spacing;
        // Perpendicular pointing along anti-clockwise travel, then jittered.
        const Vec2 perp{-dir.y, dir.x};
        const double cs = std::cos(angle);
        const double sn = std::sin(angle);
        out.push_back(magnitude * Vec2{cs * perp.x - sn * perp.y, sn * perp.x + cs * perp.y});
    }
    return out;
}

BezierLoop random_loop(Rng& rng, int n) {
    auto anchors = sample_anchor_ring(rng, n);
    auto tangents = sample_tangents(rng, anchors);
    return build_closed_loop(std::move(anchors), std::move(tangents));
}

double signed_area(std::span<const Point2> polygon) {
    const std::size_t n = polygon.size();
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = polygon[i];
        const Point2& b = polygon[(i + 1) % n];
        twice += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twice;
}

BinaryMask::BinaryMask(int h, int w, bool fill) : height(h), width(w) {
    require(h > 0 && w > 0, "mask dimensions must be positive");
    bits.assign(static_cast<std::size_t>(h) * w, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

Rasterization rasterize_polygon(std::span<const Point2> polygon, int height, int width) {
    Rasterization out{BinaryMask(height, width, false), false};
    const std::size_t n = polygon.size();
    if (n < 3 || std::abs(signed_area(polygon)) < 1e-12) {
        out.degenerate = true;
        return out;
    }

    std::vector<double> xs;
    for (int r = 0; r < height; ++r) {
        const double y = r;
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& a = polygon[i];
            const Point2& b = polygon[(i + 1) % n];
            if ((a.y > y) != (b.y > y)) xs.push_back((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
        }
        std::sort(xs.begin(), xs.end());
        // Column c is inside iff an odd number of crossings lie strictly right
        // of it, i.e. xs[2k] <= c < xs[2k+1].
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double lo = std::max(std::ceil(xs[k]), 0.0);
            const double hi = std::min(std::ceil(xs[k + 1]) - 1.0, static_cast<double>(width - 1));
            for (int c = static_cast<int>(lo); c <= static_cast<int>(hi); ++c) out.mask.set(r, c, true);
        }

        // Centers on the boundary itself.
        for (std::size_t i = 0; i < n; ++i) {
            const Point2& a = polygon[i];
            const Point2& b = polygon[(i + 1) % n];
            if (y < std::min(a.y, b.y) || y > std::max(a.y, b.y)) continue;
            if (a.y == b.y) {
                const double lo = std::max(std::ceil(std::min(a.x, b.x)), 0.0);
                const double hi = std::min(std::floor(std::max(a.x, b.x)), static_cast<double>(width - 1));
                for (int c = static_cast<int>(lo); c <= static_cast<int>(hi); ++c) out.mask.set(r, c, true);
                continue;
            }
            const double x = (b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x;
            if (x == std::floor(x) && x >= 0.0 && x <= width - 1) out.mask.set(r, static_cast<int>(x), true);
        }
    }
    return out;
}

Rasterization rasterize_loop(const BezierLoop& loop, int height, int width, int samples_per_segment) {
    require(height > 0 && width > 0, "rasterize_loop: dimensions must be positive");
    auto poly = loop.polygonize(samples_per_segment);
    const double sx = width - 1;
    const double sy = height - 1;
    for (auto& p : poly) p = {p.x * sx, p.y * sy};
    return rasterize_polygon(poly, height, width);
}

}  // namespace tissuemix::geometry
