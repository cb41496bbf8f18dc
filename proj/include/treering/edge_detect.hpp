#pragma once

#include <vector>

#include "treering/geometry.hpp"
#include "treering/raster.hpp"

namespace treering {

/// Sub-pixel edge location plus the smoothed intensity gradient there.
/// The gradient points from dark to light across the edge.
struct EdgePoint {
    double x = 0.0;
    double y = 0.0;
    Point2 gradient;
};

/// Ordered run of connected edge points. Consecutive points are at most
/// 2 px apart. Closed curves repeat their first point as the last one.
struct EdgeChain {
    std::vector<EdgePoint> points;

    bool is_closed() const {
        return points.size() >= 3 && points.front().x == points.back().x &&
               points.front().y == points.back().y;
    }
};

/// Dense gradient of a grayscale image, row-major like the image itself.
struct GradientField {
    int width = 0;
    int height = 0;
    std::vector<double> gx;
    std::vector<double> gy;
    std::vector<double> mag;

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
};

/// Gradient by convolution with separable Gaussian-derivative kernels
/// (Gaussian smoothing in one axis, Gaussian first derivative in the
/// other). Kernels are normalized so a unit intensity ramp yields a unit
/// gradient. Borders use symmetric reflection.
GradientField gaussian_gradient(const GrayImage& image, double sigma);

/// Percentile (0..100, nearest rank) of the strictly positive gradient
/// magnitudes; returns 0 when there are none. Used to pick hysteresis
/// thresholds when the caller gives none.
double magnitude_percentile(const GradientField& grad, double pct);

/// Canny/Devernay chained sub-pixel edge detection on a precomputed
/// gradient: non-maximum suppression along the dominant gradient axis,
/// quadratic (parabola) sub-pixel correction, greedy local chaining,
/// hysteresis thresholding. Chains are sorted by the raster order of
/// their first point.
std::vector<EdgeChain> detect_edges(const GradientField& grad, double low_th, double high_th);

/// Convenience overload: Gaussian-derivative gradient at `sigma`, then
/// edge detection with the given absolute hysteresis thresholds.
std::vector<EdgeChain> detect_edges(const GrayImage& image, double sigma, double low_th,
                                    double high_th);

}  // namespace treering
