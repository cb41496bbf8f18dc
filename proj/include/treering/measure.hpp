#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "treering/ring_detect.hpp"
#include "treering/spider_geometry.hpp"

namespace treering {

/// One ring of the growth series, innermost first. Millimeter columns are
/// present only after calibration.
struct GrowthRow {
    double area_px2 = 0.0;
    double r_eq_px = 0.0;        // radius of the disk with the same area
    double delta_r_eq_px = 0.0;  // increment over the previous ring
    std::optional<double> area_mm2;
    std::optional<double> r_eq_mm;
    std::optional<double> delta_r_eq_mm;
};

struct GrowthSeries {
    std::vector<GrowthRow> rows;
};

/// Cumulative pith-to-ring distances along the four cardinal rays,
/// innermost ring first. Consecutive differences are ring widths.
struct CardinalWidths {
    std::vector<double> north;
    std::vector<double> south;
    std::vector<double> east;
    std::vector<double> west;
};

/// Proportional px -> mm fit R_mm = m * R_px.
struct CalibrationFit {
    double m = 0.0;            // mm per pixel
    double residual_rms = 0.0; // mm
    int n_points = 0;
};

/// Shoelace area of the ring's polygon, px^2.
double ring_area(const Ring& ring);

/// Equivalent-radius series r_eq = sqrt(area / pi). Rings are sorted by
/// mean radius; they must be strictly nested on every ray, otherwise
/// NonNestedRings. The innermost increment is measured from the pith, so
/// delta_r_eq of ring 1 equals its r_eq.
GrowthSeries equivalent_series(const std::vector<Ring>& rings);

/// Fills the millimeter columns of a series in place.
void apply_calibration(GrowthSeries& series, const CalibrationFit& fit);

/// Ring radii along the E (ray 0), S (ray Nr/4), W (ray Nr/2) and
/// N (ray 3Nr/4) directions of the web; image y grows downward, so the
/// +y ray points south. nb_rays must be divisible by 4. Rings sampled on
/// a different ray count raise RingMissesRay.
CardinalWidths cardinal_widths(const std::vector<Ring>& rings, const SpiderWeb& web);

/// Least squares through the origin: m = sum(px*mm) / sum(px^2).
CalibrationFit calibrate(const std::vector<double>& px_measures,
                         const std::vector<double>& mm_measures);

/// CSV writers. Columns:
///   growth:   ring_index, area_px2, r_eq_px, delta_r_eq_px
///             [, area_mm2, r_eq_mm, delta_r_eq_mm when calibrated]
///   cardinal: ring_index, north_px, south_px, east_px, west_px
void write_growth_csv(const std::filesystem::path& path, const GrowthSeries& series);
void write_cardinal_csv(const std::filesystem::path& path, const CardinalWidths& widths);

}  // namespace treering
