#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace treering {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// Angle of p relative to the +x axis, normalized to [0, 2*pi).
/// Image convention: y grows downward, angles increase from +x toward +y.
inline double polar_angle(Point2 p) {
    double a = std::atan2(p.y, p.x);
    if (a < 0.0) a += kTwoPi;
    return a;
}

/// Signed shoelace area of a closed polygon (first/last vertex implicitly
/// connected). Positive when vertices advance in +angle order.
double polygon_signed_area(std::span<const Point2> polygon);

inline double polygon_area(std::span<const Point2> polygon) {
    return std::abs(polygon_signed_area(polygon));
}

/// Intersection of the half-line origin + t*dir (t >= 0) with segment [p, q].
/// On hit, returns true and sets t (distance along the ray when dir is unit
/// length) and s in [0, 1] (position along the segment). Hits within a tiny
/// tolerance of a segment endpoint count and have s snapped to the range, so
/// a ray through a shared polygon vertex always hits one of the two incident
/// segments. Parallel segments never hit.
bool ray_segment_intersect(Point2 origin, Point2 dir, Point2 p, Point2 q,
                           double& t, double& s);

}  // namespace treering
