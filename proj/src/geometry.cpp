#include "treering/geometry.hpp"

#include <algorithm>

namespace treering {

double polygon_signed_area(std::span<const Point2> polygon) {
    const std::size_t n = polygon.size();
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = polygon[i];
        const Point2& b = polygon[(i + 1) % n];
        acc += cross(a, b);
    }
    return 0.5 * acc;
}

bool ray_segment_intersect(Point2 origin, Point2 dir, Point2 p, Point2 q,
                           double& t, double& s) {
    const Point2 seg = q - p;
    const double denom = cross(dir, seg);
    if (std::abs(denom) < 1e-12) return false;  // parallel or degenerate
    const Point2 w = p - origin;
    s = -cross(dir, w) / denom;
    t = cross(w, seg) / denom;
    // Hits a hair outside an endpoint are rounding, not geometry: a ray
    // passing exactly through a shared vertex must not slip between the two
    // segments that meet there.
    constexpr double kEndpointTol = 1e-9;
    if (s < -kEndpointTol || s > 1.0 + kEndpointTol || t < 0.0) return false;
    s = std::clamp(s, 0.0, 1.0);
    return true;
}

}  // namespace treering
