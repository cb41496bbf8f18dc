#include "treering/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "treering/errors.hpp"
#include "treering/geometry.hpp"

namespace treering {

double ring_area(const Ring& ring) {
    return polygon_area(ring.polygon);
}

GrowthSeries equivalent_series(const std::vector<Ring>& rings) {
    std::vector<const Ring*> ordered;
    ordered.reserve(rings.size());
    for (const Ring& r : rings) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const Ring* a, const Ring* b) { return a->mean_radius() < b->mean_radius(); });
    for (std::size_t k = 0; k + 1 < ordered.size(); ++k) {
        const Ring& inner = *ordered[k];
        const Ring& outer = *ordered[k + 1];
        if (inner.radii.size() != outer.radii.size()) {
            throw DimensionMismatch("rings sampled on different ray counts");
        }
        for (std::size_t i = 0; i < inner.radii.size(); ++i) {
            if (inner.radii[i] >= outer.radii[i]) {
                throw NonNestedRings("rings " + std::to_string(k) + " and " + std::to_string(k + 1) +
                                     " overlap on ray " + std::to_string(i));
            }
        }
    }
    GrowthSeries series;
    series.rows.reserve(ordered.size());
    double prev_r_eq = 0.0;  // pith counts as a degenerate ring of area 0
    for (const Ring* ring : ordered) {
        GrowthRow row;
        row.area_px2 = ring_area(*ring);
        row.r_eq_px = std::sqrt(row.area_px2 / kPi);
        row.delta_r_eq_px = row.r_eq_px - prev_r_eq;
        prev_r_eq = row.r_eq_px;
        series.rows.push_back(row);
    }
    return series;
}

void apply_calibration(GrowthSeries& series, const CalibrationFit& fit) {
    for (GrowthRow& row : series.rows) {
        row.area_mm2 = row.area_px2 * fit.m * fit.m;
        row.r_eq_mm = row.r_eq_px * fit.m;
        row.delta_r_eq_mm = row.delta_r_eq_px * fit.m;
    }
}

CardinalWidths cardinal_widths(const std::vector<Ring>& rings, const SpiderWeb& web) {
    if (web.nb_rays % 4 != 0) {
        throw BadRayCount("cardinal directions need nb_rays divisible by 4, got " +
                          std::to_string(web.nb_rays));
    }
    std::vector<const Ring*> ordered;
    ordered.reserve(rings.size());
    for (const Ring& r : rings) {
        if (static_cast<int>(r.radii.size()) != web.nb_rays) {
            throw RingMissesRay("ring sampled on " + std::to_string(r.radii.size()) +
                                " rays cannot be read on a " + std::to_string(web.nb_rays) +
                                "-ray web");
        }
        ordered.push_back(&r);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Ring* a, const Ring* b) { return a->mean_radius() < b->mean_radius(); });
    const int east = 0;
    const int south = web.nb_rays / 4;
    const int west = web.nb_rays / 2;
    const int north = 3 * web.nb_rays / 4;
    CardinalWidths widths;
    for (const Ring* ring : ordered) {
        widths.east.push_back(ring->radii[east]);
        widths.south.push_back(ring->radii[south]);
        widths.west.push_back(ring->radii[west]);
        widths.north.push_back(ring->radii[north]);
    }
    return widths;
}

CalibrationFit calibrate(const std::vector<double>& px_measures,
                         const std::vector<double>& mm_measures) {
    if (px_measures.size() != mm_measures.size()) {
        throw DimensionMismatch("calibration needs matching lists, got " +
                                std::to_string(px_measures.size()) + " px and " +
                                std::to_string(mm_measures.size()) + " mm values");
    }
    if (px_measures.empty()) {
        throw EmptyData("calibration needs at least one measurement pair");
    }
    double sum_xy = 0.0;
    double sum_xx = 0.0;
    for (std::size_t i = 0; i < px_measures.size(); ++i) {
        sum_xy += px_measures[i] * mm_measures[i];
        sum_xx += px_measures[i] * px_measures[i];
    }
    if (sum_xx <= 0.0) {
        throw AllZeroPx("all pixel measurements are zero, slope is undefined");
    }
    CalibrationFit fit;
    fit.m = sum_xy / sum_xx;
    fit.n_points = static_cast<int>(px_measures.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < px_measures.size(); ++i) {
        const double r = mm_measures[i] - fit.m * px_measures[i];
        sq += r * r;
    }
    fit.residual_rms = std::sqrt(sq / static_cast<double>(px_measures.size()));
    return fit;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoFailure("cannot open for writing: " + path.string());
    }
    return out;
}

}  // namespace

void write_growth_csv(const std::filesystem::path& path, const GrowthSeries& series) {
    std::ofstream out = open_csv(path);
    const bool calibrated = !series.rows.empty() && series.rows.front().area_mm2.has_value();
    out << "ring_index,area_px2,r_eq_px,delta_r_eq_px";
    if (calibrated) out << ",area_mm2,r_eq_mm,delta_r_eq_mm";
    out << "\n";
    for (std::size_t k = 0; k < series.rows.size(); ++k) {
        const GrowthRow& row = series.rows[k];
        out << (k + 1) << ',' << fmt(row.area_px2) << ',' << fmt(row.r_eq_px) << ','
            << fmt(row.delta_r_eq_px);
        if (calibrated) {
            out << ',' << fmt(*row.area_mm2) << ',' << fmt(*row.r_eq_mm) << ','
                << fmt(*row.delta_r_eq_mm);
        }
        out << "\n";
    }
    if (!out) {
        throw IoFailure("failed while writing: " + path.string());
    }
}

void write_cardinal_csv(const std::filesystem::path& path, const CardinalWidths& widths) {
    std::ofstream out = open_csv(path);
    out << "ring_index,north_px,south_px,east_px,west_px\n";
    for (std::size_t k = 0; k < widths.north.size(); ++k) {
        out << (k + 1) << ',' << fmt(widths.north[k]) << ',' << fmt(widths.south[k]) << ','
            << fmt(widths.east[k]) << ',' << fmt(widths.west[k]) << "\n";
    }
    if (!out) {
        throw IoFailure("failed while writing: " + path.string());
    }
}

}  // namespace treering
