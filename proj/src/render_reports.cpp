#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "treering/errors.hpp"
#include "treering/evaluate.hpp"

namespace treering {

namespace {

cv::Point to_cv(Point2 p) {
    return cv::Point(static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y)));
}

std::vector<cv::Point> ring_poly(const Ring& ring) {
    std::vector<cv::Point> pts;
    pts.reserve(ring.polygon.size());
    for (const Point2& p : ring.polygon) pts.push_back(to_cv(p));
    return pts;
}

void draw_closed(cv::Mat& canvas, const std::vector<cv::Point>& pts, const cv::Scalar& color,
                 int thickness) {
    if (pts.size() < 2) return;
    std::vector<std::vector<cv::Point>> wrap{pts};
    cv::polylines(canvas, wrap, /*isClosed=*/true, color, thickness, cv::LINE_AA);
}

void write_png(const cv::Mat& canvas, const std::filesystem::path& path) {
    if (!cv::imwrite(path.string(), canvas)) {
        throw IoFailure("cannot write report image: " + path.string());
    }
}

// matplotlib's Spectral palette, low to high, as RGB anchors.
constexpr std::array<std::array<int, 3>, 11> kSpectral = {{{158, 1, 66},
                                                           {213, 62, 79},
                                                           {244, 109, 67},
                                                           {253, 174, 97},
                                                           {254, 224, 139},
                                                           {255, 255, 191},
                                                           {230, 245, 152},
                                                           {171, 221, 164},
                                                           {102, 194, 165},
                                                           {50, 136, 189},
                                                           {94, 79, 162}}};

cv::Scalar spectral_color(double v) {
    v = std::clamp(v, 0.0, 1.0);
    const double pos = v * (kSpectral.size() - 1);
    const int lo = static_cast<int>(std::floor(pos));
    const int hi = std::min<int>(lo + 1, kSpectral.size() - 1);
    const double f = pos - lo;
    const auto mix = [&](int c) {
        return kSpectral[lo][c] + f * (kSpectral[hi][c] - kSpectral[lo][c]);
    };
    return cv::Scalar(mix(2), mix(1), mix(0));  // BGR
}

// Distinct colors for matched detection/GT pairs (BGR).
const std::vector<cv::Scalar> kPairPalette = {
    {60, 76, 231},  {74, 195, 139}, {0, 152, 255},  {226, 173, 93},  {183, 58, 103},
    {140, 199, 0},  {18, 156, 243}, {167, 108, 156}, {34, 126, 230},  {128, 128, 0},
};

std::vector<int> gt_band_order(const std::vector<Ring>& gt) {
    // band index -> gt index, mirroring the sort inside build_influence_map
    std::vector<int> order(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return gt[a].mean_radius() < gt[b].mean_radius();
    });
    return order;
}

void render_dots_curve_and_rays(const cv::Mat& base, const std::vector<Ring>& gt,
                                const std::vector<Ring>& detections, const InfluenceMap& map,
                                const SpiderWeb& web, const std::filesystem::path& out) {
    cv::Mat canvas = base.clone();
    const cv::Point center = to_cv(web.center);
    for (int i = 0; i < web.nb_rays; ++i) {
        const double bound = map.boundaries[i].back();
        cv::line(canvas, center, to_cv(web.point_at(i, bound)), cv::Scalar(190, 190, 190), 1,
                 cv::LINE_AA);
    }
    for (const Ring& ring : gt) {
        draw_closed(canvas, ring_poly(ring), cv::Scalar(40, 180, 40), 2);
    }
    for (const Ring& ring : detections) {
        for (const Point2& p : ring.polygon) {
            cv::circle(canvas, to_cv(p), 2, cv::Scalar(40, 40, 220), cv::FILLED, cv::LINE_AA);
        }
    }
    write_png(canvas, out);
}

void render_influence_area(const cv::Mat& base, const std::vector<Ring>& gt,
                           const InfluenceMap& map, const SpiderWeb& web,
                           const std::filesystem::path& out) {
    cv::Mat canvas = base.clone();
    // Band frontiers (midpoints between consecutive rings, then the
    // section bound) in blue; the rings themselves in green.
    for (int k = 1; k <= map.nb_rings; ++k) {
        std::vector<cv::Point> pts;
        pts.reserve(web.nb_rays);
        for (int i = 0; i < web.nb_rays; ++i) {
            pts.push_back(to_cv(web.point_at(i, map.boundaries[i][k])));
        }
        draw_closed(canvas, pts, cv::Scalar(230, 140, 30), 1);
    }
    for (const Ring& ring : gt) {
        draw_closed(canvas, ring_poly(ring), cv::Scalar(40, 180, 40), 1);
    }
    write_png(canvas, out);
}

void render_assigned(const cv::Mat& base, const std::vector<Ring>& gt,
                     const std::vector<Ring>& detections, const Assignment& assignment,
                     const std::filesystem::path& out) {
    cv::Mat canvas = base.clone();
    for (std::size_t k = 0; k < assignment.matches.size(); ++k) {
        const auto [det, g] = assignment.matches[k];
        const cv::Scalar color = kPairPalette[k % kPairPalette.size()];
        draw_closed(canvas, ring_poly(gt[g]), color, 1);
        for (const Point2& p : detections[det].polygon) {
            cv::circle(canvas, to_cv(p), 2, color, cv::FILLED, cv::LINE_AA);
        }
    }
    for (int det : assignment.false_positives) {
        draw_closed(canvas, ring_poly(detections[det]), cv::Scalar(255, 255, 255), 2);
    }
    for (int g : assignment.false_negatives) {
        draw_closed(canvas, ring_poly(gt[g]), cv::Scalar(90, 90, 90), 1);
    }
    write_png(canvas, out);
}

void render_rmse_chart(const EvalReport& report, const std::filesystem::path& out) {
    const int width = 900;
    const int height = 600;
    const int margin = 70;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
    const int plot_w = width - 2 * margin;
    const int plot_h = height - 2 * margin;
    cv::line(canvas, {margin, height - margin}, {width - margin, height - margin},
             cv::Scalar(0, 0, 0), 2);
    cv::line(canvas, {margin, height - margin}, {margin, margin}, cv::Scalar(0, 0, 0), 2);

    double max_val = 0.0;
    for (const auto& v : report.rmse_per_ring) {
        if (v) max_val = std::max(max_val, *v);
    }
    if (max_val <= 0.0) max_val = 1.0;
    const int n = std::max<int>(1, static_cast<int>(report.rmse_per_ring.size()));
    const double slot = static_cast<double>(plot_w) / n;

    for (std::size_t k = 0; k < report.rmse_per_ring.size(); ++k) {
        const int x0 = margin + static_cast<int>(k * slot + slot * 0.15);
        const int x1 = margin + static_cast<int>(k * slot + slot * 0.85);
        if (report.rmse_per_ring[k]) {
            const int bar = static_cast<int>(*report.rmse_per_ring[k] / max_val * plot_h);
            cv::rectangle(canvas, {x0, height - margin - bar}, {x1, height - margin},
                          cv::Scalar(180, 130, 70), cv::FILLED);
        }
        // Empty slots (false negatives) keep their tick so the gap shows.
        cv::putText(canvas, std::to_string(k), {x0, height - margin + 25},
                    cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    }
    char label[64];
    std::snprintf(label, sizeof(label), "%.2f px", max_val);
    cv::putText(canvas, label, {8, margin + 5}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    cv::putText(canvas, "RMSE per ground-truth ring", {margin, margin - 20},
                cv::FONT_HERSHEY_SIMPLEX, 0.7, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    write_png(canvas, out);
}

void render_heat_map(const cv::Mat& base, const std::vector<Ring>& gt,
                     const std::vector<Ring>& detections, const Assignment& assignment,
                     const InfluenceMap& map, const SpiderWeb& web,
                     const std::filesystem::path& out) {
    cv::Mat canvas = base.clone();
    const std::vector<int> order = gt_band_order(gt);
    std::vector<int> band_of_gt(gt.size(), -1);
    for (std::size_t band = 0; band < order.size(); ++band) band_of_gt[order[band]] = static_cast<int>(band);

    double vmax = 0.0;
    for (const auto& [det, g] : assignment.matches) {
        for (int i = 0; i < web.nb_rays; ++i) {
            vmax = std::max(vmax, std::abs(detections[det].radii[i] - gt[g].radii[i]));
        }
    }
    if (vmax <= 0.0) vmax = 1.0;

    for (const auto& [det, g] : assignment.matches) {
        const int band = band_of_gt[g];
        for (int i = 0; i < web.nb_rays; ++i) {
            const int j = web.wrap(i + 1);
            // Signed error, negative when the detection fell inward.
            const double err = detections[det].radii[i] - gt[g].radii[i];
            const cv::Scalar color = spectral_color((err + vmax) / (2.0 * vmax));
            const std::array<cv::Point, 4> quad = {
                to_cv(web.point_at(i, map.boundaries[i][band])),
                to_cv(web.point_at(i, map.boundaries[i][band + 1])),
                to_cv(web.point_at(j, map.boundaries[j][band + 1])),
                to_cv(web.point_at(j, map.boundaries[j][band])),
            };
            cv::fillConvexPoly(canvas, quad.data(), static_cast<int>(quad.size()), color,
                               cv::LINE_AA);
        }
    }

    // Color bar on the right edge.
    const int bar_w = std::max(12, canvas.cols / 60);
    const int bar_x = canvas.cols - bar_w - 10;
    const int bar_top = canvas.rows / 6;
    const int bar_h = canvas.rows * 2 / 3;
    for (int y = 0; y < bar_h; ++y) {
        const double v = 1.0 - static_cast<double>(y) / (bar_h - 1);
        cv::line(canvas, {bar_x, bar_top + y}, {bar_x + bar_w, bar_top + y}, spectral_color(v), 1);
    }
    char label[64];
    std::snprintf(label, sizeof(label), "%+.1f", vmax);
    cv::putText(canvas, label, {bar_x - 60, bar_top + 8}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    std::snprintf(label, sizeof(label), "%+.1f", -vmax);
    cv::putText(canvas, label, {bar_x - 60, bar_top + bar_h}, cv::FONT_HERSHEY_SIMPLEX, 0.5,
                cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    write_png(canvas, out);
}

}  // namespace

void render_reports(const ColorImage& image, const std::vector<Ring>& gt,
                    const std::vector<Ring>& detections, const Assignment& assignment,
                    const std::vector<double>& match_rmse, const InfluenceMap& map,
                    const SpiderWeb& web, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const cv::Mat base = cvb::to_mat(image);
    render_dots_curve_and_rays(base, gt, detections, map, web,
                               out_dir / "dots_curve_and_rays.png");
    render_influence_area(base, gt, map, web, out_dir / "influence_area.png");
    render_assigned(base, gt, detections, assignment, out_dir / "assigned_dt_gt.png");
    render_rmse_chart(score(assignment, match_rmse), out_dir / "rmse.png");
    render_heat_map(base, gt, detections, assignment, map, web,
                    out_dir / "heat_map_Spectral.png");
}

}  // namespace treering
