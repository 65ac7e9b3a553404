#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tissuemix/rng.hpp"

namespace tissuemix::geometry {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

using Point2 = Vec2;

double norm(Vec2 v);

/// Four control points of a cubic curve.
struct BezierSegment {
    Point2 p0, p1, p2, p3;
};

/// Bernstein-form evaluation of an arbitrary-order curve with control
/// points `ctrl` (order = ctrl.size() - 1). 0^0 evaluates to 1, so t = 0 and
/// t = 1 interpolate the end points exactly.
Point2 eval_bezier(std::span<const Point2> ctrl, double t);

Point2 eval_cubic_bezier(const BezierSegment& seg, double t);
Vec2 eval_cubic_bezier_derivative(const BezierSegment& seg, double t);

/// Closed chain of cubic segments through `anchors`. Segment i runs from
/// anchors[i] to anchors[i+1 mod N]; its inner control points are the
/// anchors offset by +tangents[i] and -tangents[i+1], which makes the first
/// derivative continuous across every joint.
class BezierLoop {
public:
    BezierLoop(std::vector<Point2> anchors, std::vector<Vec2> tangents);

    const std::vector<Point2>& anchors() const { return anchors_; }
    const std::vector<Vec2>& tangents() const { return tangents_; }
    const std::vector<BezierSegment>& segments() const { return segments_; }
    std::size_t size() const { return anchors_.size(); }

    /// Max |C_i'(1) - C_{i+1}'(0)| over all joints.
    double c1_residual() const;

    /// Uniform-t polyline, `samples_per_segment` points per segment, closing
    /// implicitly back to the first point.
    std::vector<Point2> polygonize(int samples_per_segment) const;

private:
    std::vector<Point2> anchors_;
    std::vector<Vec2> tangents_;
    std::vector<BezierSegment> segments_;
};

BezierLoop build_closed_loop(std::vector<Point2> anchors, std::vector<Vec2> tangents);

inline constexpr double kMinAnchorSeparation = 0.05;

/// `n` points in the unit square with pairwise distance >= 0.05, sorted
/// anti-clockwise by angle about their centroid.
std::vector<Point2> sample_anchor_ring(Rng& rng, int n);

/// Per-anchor tangents: perpendicular to the centroid direction, jittered by
/// up to +/-30 degrees, magnitude in [0.1, 0.5] x mean anchor spacing.
std::vector<Vec2> sample_tangents(Rng& rng, std::span<const Point2> anchors);

/// sample_anchor_ring + sample_tangents + build_closed_loop.
BezierLoop random_loop(Rng& rng, int n);

/// Shoelace area, positive for anti-clockwise order (x right, y up).
double signed_area(std::span<const Point2> polygon);

struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, row-major

    BinaryMask() = default;
    BinaryMask(int h, int w, bool fill = false);

    bool at(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c] != 0; }
    void set(int r, int c, bool v) { bits[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0; }
    std::size_t count() const;

    bool operator==(const BinaryMask&) const = default;
};

struct Rasterization {
    BinaryMask mask;
    bool degenerate = false;  // zero-area polyline; mask is all false
};

inline constexpr int kDefaultSamplesPerSegment = 64;

/// Scanline even-odd fill of an arbitrary closed polygon given in pixel
/// coordinates (x = column, y = row, pixel centers at integers). Centers
/// that lie exactly on an edge are inside.
Rasterization rasterize_polygon(std::span<const Point2> polygon, int height, int width);

/// Scales the loop from the unit square to (width-1) x (height-1) and fills
/// it with rasterize_polygon.
Rasterization rasterize_loop(const BezierLoop& loop, int height, int width,
                             int samples_per_segment = kDefaultSamplesPerSegment);

}  // namespace tissuemix::geometry
