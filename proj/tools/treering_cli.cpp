#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treering/annotation_io.hpp"
#include "treering/errors.hpp"
#include "treering/evaluate.hpp"
#include "treering/measure.hpp"
#include "treering/raster.hpp"
#include "treering/ring_detect.hpp"
#include "treering/spider_geometry.hpp"

namespace {

using namespace treering;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Shared option groups
// ---------------------------------------------------------------------------

struct PithArgs {
    double cx = 0.0;
    double cy = 0.0;
    bool has_cx = false;
    bool has_cy = false;
    std::string pith_csv;
    std::string section;
};

void add_pith_options(CLI::App* cmd, PithArgs& args) {
    cmd->add_option("--cx", args.cx, "Pith x coordinate, px")->each([&](const std::string&) {
        args.has_cx = true;
    });
    cmd->add_option("--cy", args.cy, "Pith y coordinate, px")->each([&](const std::string&) {
        args.has_cy = true;
    });
    cmd->add_option("--pith-csv", args.pith_csv,
                    "Pith table (name,cx,cy); alternative to --cx/--cy");
    cmd->add_option("--section", args.section, "Row name to look up in --pith-csv");
}

Point2 resolve_pith(const PithArgs& args) {
    if (args.has_cx && args.has_cy) {
        return {args.cx, args.cy};
    }
    if (!args.pith_csv.empty() && !args.section.empty()) {
        const auto table = load_pith_csv(args.pith_csv);
        const auto it = table.find(args.section);
        if (it == table.end()) {
            throw Error("section '" + args.section + "' not found in " + args.pith_csv);
        }
        return {it->second.cx, it->second.cy};
    }
    throw Error("pith location required: pass --cx and --cy, or --pith-csv and --section");
}

void add_detect_options(CLI::App* cmd, DetectParams& p) {
    cmd->add_option("--sigma", p.sigma, "Gaussian sigma for edge detection")
        ->capture_default_str();
    cmd->add_option("--nb-rays", p.nb_rays, "Number of sampling rays")->capture_default_str();
    cmd->add_option("--angle-tol", p.angle_tol_deg,
                    "Max angle between edge gradient and ray, degrees")
        ->capture_default_str();
    cmd->add_option("--th-rt", p.th_rt, "Radial-difference tolerance between chain endpoints")
        ->capture_default_str();
    cmd->add_option("--th-ds", p.th_ds,
                    "Radial-distribution overlap width, in standard deviations")
        ->capture_default_str();
    cmd->add_option("--th-rd", p.th_rd, "Allowed growth factor of the radial derivative")
        ->capture_default_str();
    cmd->add_option("--n-nodes", p.n_nodes, "Nodes examined on each side of a junction")
        ->capture_default_str();
    cmd->add_option("--relax-iters", p.relax_iters, "Connection relaxation iterations")
        ->capture_default_str();
    cmd->add_option("--relax-factor", p.relax_factor,
                    "Multiplier applied to thresholds per relaxation iteration")
        ->capture_default_str();
    cmd->add_option("--min-chain-nodes", p.min_chain_nodes,
                    "Shortest chain kept after filtering")
        ->capture_default_str();
    cmd->add_option("--min-coverage", p.min_ring_coverage,
                    "Fraction of rays a chain must cover to close into a ring")
        ->capture_default_str();
    cmd->add_option("--working-size", p.working_size, "Square working-frame size, px")
        ->capture_default_str();
    cmd->add_option("--edge-low-pct", p.edge_low_pct,
                    "Percentile of gradient magnitude for the low hysteresis threshold")
        ->capture_default_str();
    cmd->add_option("--edge-high-pct", p.edge_high_pct,
                    "Percentile of gradient magnitude for the high hysteresis threshold")
        ->capture_default_str();
}

// ---------------------------------------------------------------------------
// Small shared helpers
// ---------------------------------------------------------------------------

std::string fmt2(const std::optional<double>& v) {
    if (!v) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

std::string fmt6(const std::optional<double>& v) {
    if (!v) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *v);
    return buf;
}

std::vector<RingShape> rings_to_shapes(const std::vector<Ring>& rings) {
    std::vector<RingShape> shapes;
    shapes.reserve(rings.size());
    for (std::size_t k = 0; k < rings.size(); ++k) {
        RingShape shape;
        char label[16];
        std::snprintf(label, sizeof(label), "ring_%02zu", k + 1);
        shape.label = label;
        shape.points = rings[k].polygon;
        shapes.push_back(std::move(shape));
    }
    return shapes;
}

std::vector<Ring> shapes_to_rings(const std::vector<RingShape>& shapes, const SpiderWeb& web,
                                  RingSource source) {
    std::vector<Ring> rings;
    rings.reserve(shapes.size());
    for (const RingShape& shape : shapes) {
        rings.push_back(sample_polygon_on_rays(shape, web, source));
    }
    return rings;
}

void draw_segment(ColorImage& img, Point2 a, Point2 b, std::uint8_t r, std::uint8_t g,
                  std::uint8_t b_) {
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int x = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
        const int y = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
        if (x < 0 || x >= img.width || y < 0 || y >= img.height) continue;
        std::uint8_t* px = img.px(x, y);
        px[0] = r;
        px[1] = g;
        px[2] = b_;
    }
}

void draw_overlay(ColorImage& img, const std::vector<Ring>& rings, Point2 pith) {
    for (const Ring& ring : rings) {
        const auto& poly = ring.polygon;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            draw_segment(img, poly[i], poly[(i + 1) % poly.size()], 220, 40, 40);
        }
    }
    // Pith cross.
    draw_segment(img, {pith.x - 6, pith.y}, {pith.x + 6, pith.y}, 40, 120, 240);
    draw_segment(img, {pith.x, pith.y - 6}, {pith.x, pith.y + 6}, 40, 120, 240);
}

// Two-column CSV of px,mm pairs; a non-numeric first row is treated as a
// header.
void read_px_mm_csv(const fs::path& path, std::vector<double>& px, std::vector<double>& mm) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot read calibration data: " + path.string());
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a;
        std::string b;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',')) {
            throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'px,mm'");
        }
        try {
            const double x = std::stod(a);
            const double y = std::stod(b);
            px.push_back(x);
            mm.push_back(y);
        } catch (const std::exception&) {
            if (line_no == 1) continue;  // header row
            throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                               ": expected 'px,mm', got '" + line + "'");
        }
    }
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

struct DetectOutputs {
    std::vector<Ring> rings;
    double seconds = 0.0;
    fs::path json_path;
    fs::path overlay_path;
};

DetectOutputs run_detect(const fs::path& image_path, const fs::path& mask_path, Point2 pith,
                         const DetectParams& params, const fs::path& out_dir) {
    const ColorImage image = load_image(image_path);
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Ring> rings;
    if (!mask_path.empty()) {
        rings = detect(image, load_mask(mask_path), pith, params);
    } else {
        rings = detect(image, pith, params);
    }
    const auto t1 = std::chrono::steady_clock::now();

    fs::create_directories(out_dir);
    const std::string stem = image_path.stem().string();
    DetectOutputs out;
    out.rings = std::move(rings);
    out.seconds = std::chrono::duration<double>(t1 - t0).count();
    out.json_path = out_dir / (stem + ".json");
    out.overlay_path = out_dir / (stem + "_overlay.png");

    ImageMeta meta;
    meta.image_path = image_path.filename().string();
    meta.image_width = image.width;
    meta.image_height = image.height;
    save_annotation(out.json_path, rings_to_shapes(out.rings), meta);

    ColorImage overlay = image;
    draw_overlay(overlay, out.rings, pith);
    save_png(out.overlay_path, overlay);
    return out;
}

int cmd_detect(const fs::path& image, const fs::path& mask, const PithArgs& pith_args,
               const DetectParams& params, const fs::path& out_dir) {
    const Point2 pith = resolve_pith(pith_args);
    const DetectOutputs out = run_detect(image, mask, pith, params, out_dir);
    std::printf("rings: %zu\n", out.rings.size());
    std::printf("seconds: %.3f\n", out.seconds);
    std::printf("annotation: %s\n", out.json_path.string().c_str());
    std::printf("overlay: %s\n", out.overlay_path.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvalOutcome {
    EvalReport report;
};

EvalOutcome run_evaluate(const fs::path& dt_path, const fs::path& gt_path,
                         const fs::path& image_path, Point2 pith, double th, int nb_rays,
                         const fs::path& out_dir) {
    const ColorImage image = load_image(image_path);
    const SpiderWeb web = build_spider_web(pith, nb_rays);
    const std::vector<Ring> gt =
        shapes_to_rings(load_annotation(gt_path).shapes, web, RingSource::GroundTruth);
    const std::vector<Ring> dt =
        shapes_to_rings(load_annotation(dt_path).shapes, web, RingSource::Detected);
    const InfluenceMap map =
        build_influence_map(gt, web, image_boundary_radii(web, image.width, image.height));
    const Assignment assignment = assign(dt, gt, map, th);
    std::vector<double> match_rmse;
    match_rmse.reserve(assignment.matches.size());
    for (const auto& [d, g] : assignment.matches) {
        match_rmse.push_back(rmse(dt[d], gt[g]));
    }
    render_reports(image, gt, dt, assignment, match_rmse, map, web, out_dir);
    EvalOutcome out;
    out.report = score(assignment, match_rmse);
    return out;
}

int cmd_evaluate(const fs::path& dt_path, const fs::path& gt_path, const fs::path& image_path,
                 const PithArgs& pith_args, double th, int nb_rays, const fs::path& out_dir) {
    const Point2 pith = resolve_pith(pith_args);
    const EvalOutcome out =
        run_evaluate(dt_path, gt_path, image_path, pith, th, nb_rays, out_dir);
    std::printf("F1: %s\n", fmt2(out.report.fscore).c_str());
    std::printf("Precision: %s\n", fmt2(out.report.precision).c_str());
    std::printf("Recall: %s\n", fmt2(out.report.recall).c_str());
    std::printf("RMSE: %s\n", fmt2(out.report.rmse_overall).c_str());
    std::printf("reports: %s\n", out_dir.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

int cmd_measure(const fs::path& rings_path, const PithArgs& pith_args, int nb_rays,
                const fs::path& calib_data, const fs::path& out_dir) {
    const Point2 pith = resolve_pith(pith_args);
    const SpiderWeb web = build_spider_web(pith, nb_rays);
    const std::vector<Ring> rings =
        shapes_to_rings(load_annotation(rings_path).shapes, web, RingSource::Detected);
    GrowthSeries series = equivalent_series(rings);
    const CardinalWidths widths = cardinal_widths(rings, web);

    if (!calib_data.empty()) {
        std::vector<double> px;
        std::vector<double> mm;
        read_px_mm_csv(calib_data, px, mm);
        const CalibrationFit fit = calibrate(px, mm);
        apply_calibration(series, fit);
        std::printf("m_mm_per_px: %.9f\n", fit.m);
    }

    fs::create_directories(out_dir);
    const fs::path growth_path = out_dir / "growth.csv";
    const fs::path cardinal_path = out_dir / "cardinal.csv";
    write_growth_csv(growth_path, series);
    write_cardinal_csv(cardinal_path, widths);
    std::printf("rings: %zu\n", rings.size());
    std::printf("growth_csv: %s\n", growth_path.string().c_str());
    std::printf("cardinal_csv: %s\n", cardinal_path.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

int cmd_calibrate(const fs::path& data_path) {
    std::vector<double> px;
    std::vector<double> mm;
    read_px_mm_csv(data_path, px, mm);
    const CalibrationFit fit = calibrate(px, mm);
    std::printf("m_mm_per_px: %.9f\n", fit.m);
    std::printf("residual_rms_mm: %.9f\n", fit.residual_rms);
    std::printf("n_points: %d\n", fit.n_points);
    return 0;
}

// ---------------------------------------------------------------------------
// batch
// ---------------------------------------------------------------------------

struct BatchRow {
    fs::path image;
    double cx = 0.0;
    double cy = 0.0;
    fs::path gt;    // empty: detection only
    fs::path mask;  // empty: no mask
};

std::vector<BatchRow> parse_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoFailure("cannot read manifest: " + path.string());
    }
    const fs::path base = path.parent_path();
    std::string line;
    std::vector<BatchRow> rows;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (!saw_header) {
            if (fields.size() < 3 || fields[0] != "image" || fields[1] != "cx" ||
                fields[2] != "cy") {
                throw MalformedRow(path.string() + ": header must start 'image,cx,cy'");
            }
            saw_header = true;
            continue;
        }
        if (fields.size() < 3) {
            throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                               ": expected image,cx,cy[,gt[,mask]]");
        }
        BatchRow r;
        r.image = base / fields[0];
        try {
            r.cx = std::stod(fields[1]);
            r.cy = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw MalformedRow(path.string() + ":" + std::to_string(line_no) +
                               ": cx/cy must be numeric");
        }
        if (fields.size() > 3 && !fields[3].empty()) r.gt = base / fields[3];
        if (fields.size() > 4 && !fields[4].empty()) r.mask = base / fields[4];
        rows.push_back(std::move(r));
    }
    if (!saw_header) {
        throw MalformedRow(path.string() + ": empty manifest");
    }
    return rows;
}

int cmd_batch(const fs::path& manifest, const DetectParams& params, double th,
              const fs::path& out_dir) {
    const std::vector<BatchRow> rows = parse_manifest(manifest);
    fs::create_directories(out_dir);
    std::ofstream summary(out_dir / "summary.csv");
    if (!summary) {
        throw IoFailure("cannot write summary: " + (out_dir / "summary.csv").string());
    }
    summary << "name,rings,tp,fp,fn,precision,recall,fscore,rmse_px,seconds\n";
    std::printf("%-16s %6s %4s %4s %4s %6s %6s %6s %8s %8s\n", "name", "rings", "TP", "FP",
                "FN", "P", "R", "F", "RMSE", "seconds");

    double f_sum = 0.0;
    double rmse_sum = 0.0;
    int scored = 0;
    for (const BatchRow& row : rows) {
        const std::string name = row.image.stem().string();
        const Point2 pith{row.cx, row.cy};
        const DetectOutputs det = run_detect(row.image, row.mask, pith, params, out_dir / name);

        std::optional<EvalReport> report;
        if (!row.gt.empty()) {
            const EvalOutcome out = run_evaluate(det.json_path, row.gt, row.image, pith, th,
                                                 params.nb_rays, out_dir / name);
            report = out.report;
        }

        summary << name << ',' << det.rings.size();
        if (report) {
            summary << ',' << report->tp << ',' << report->fp << ',' << report->fn << ','
                    << fmt6(report->precision) << ',' << fmt6(report->recall) << ','
                    << fmt6(report->fscore) << ',' << fmt6(report->rmse_overall);
        } else {
            summary << ",,,,,,,";
        }
        char secs[32];
        std::snprintf(secs, sizeof(secs), "%.3f", det.seconds);
        summary << ',' << secs << "\n";

        if (report) {
            std::printf("%-16s %6zu %4d %4d %4d %6s %6s %6s %8s %8.3f\n", name.c_str(),
                        det.rings.size(), report->tp, report->fp, report->fn,
                        fmt2(report->precision).c_str(), fmt2(report->recall).c_str(),
                        fmt2(report->fscore).c_str(), fmt2(report->rmse_overall).c_str(),
                        det.seconds);
            if (report->fscore) {
                f_sum += *report->fscore;
                ++scored;
            }
            if (report->rmse_overall) rmse_sum += *report->rmse_overall;
        } else {
            std::printf("%-16s %6zu %4s %4s %4s %6s %6s %6s %8s %8.3f\n", name.c_str(),
                        det.rings.size(), "-", "-", "-", "-", "-", "-", "-", det.seconds);
        }
    }
    if (scored > 0) {
        std::printf("%-16s %6s %4s %4s %4s %6s %6s %6.2f %8.2f %8s\n", "average", "", "", "",
                    "", "", "", f_sum / scored, rmse_sum / scored, "");
    }
    if (!summary) {
        throw IoFailure("failed while writing the batch summary");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tree-ring detection, evaluation and dendrometry for cross-section images"};
    app.require_subcommand(1);

    // detect
    auto* detect_cmd =
        app.add_subcommand("detect", "Detect rings; writes annotation JSON and an overlay PNG");
    fs::path det_image;
    fs::path det_mask;
    fs::path det_out = ".";
    PithArgs det_pith;
    DetectParams det_params;
    detect_cmd->add_option("--image", det_image, "Cross-section photograph")->required();
    detect_cmd->add_option("--mask", det_mask, "Background mask (0 = background)");
    detect_cmd->add_option("--output-dir", det_out, "Output directory")->capture_default_str();
    add_pith_options(detect_cmd, det_pith);
    add_detect_options(detect_cmd, det_params);

    // evaluate
    auto* eval_cmd = app.add_subcommand(
        "evaluate", "Score a detection against ground truth; writes the five report images");
    fs::path ev_dt;
    fs::path ev_gt;
    fs::path ev_image;
    fs::path ev_out = ".";
    double ev_th = 0.6;
    int ev_rays = 360;
    PithArgs ev_pith;
    eval_cmd->add_option("--dt", ev_dt, "Detection annotation JSON")->required();
    eval_cmd->add_option("--gt", ev_gt, "Ground-truth annotation JSON")->required();
    eval_cmd->add_option("--image", ev_image, "Cross-section photograph")->required();
    eval_cmd->add_option("--output-dir", ev_out, "Output directory")->capture_default_str();
    eval_cmd->add_option("--th", ev_th, "Fraction of nodes required inside a band to match")
        ->capture_default_str();
    eval_cmd->add_option("--nb-rays", ev_rays, "Number of sampling rays")->capture_default_str();
    add_pith_options(eval_cmd, ev_pith);

    // measure
    auto* measure_cmd = app.add_subcommand(
        "measure", "Growth series and cardinal ring widths from an annotation");
    fs::path me_rings;
    fs::path me_calib;
    fs::path me_out = ".";
    int me_rays = 360;
    PithArgs me_pith;
    measure_cmd->add_option("--rings", me_rings, "Ring annotation JSON")->required();
    measure_cmd->add_option("--calib-data", me_calib,
                            "px,mm pairs; adds millimeter columns to the growth series");
    measure_cmd->add_option("--output-dir", me_out, "Output directory")->capture_default_str();
    measure_cmd->add_option("--nb-rays", me_rays, "Number of sampling rays")
        ->capture_default_str();
    add_pith_options(measure_cmd, me_pith);

    // calibrate
    auto* calib_cmd =
        app.add_subcommand("calibrate", "Least-squares px->mm scale from measurement pairs");
    fs::path ca_data;
    calib_cmd->add_option("--data", ca_data, "CSV of px,mm pairs")->required();

    // batch
    auto* batch_cmd = app.add_subcommand(
        "batch", "Run detection (and evaluation where ground truth is given) over a manifest");
    fs::path ba_manifest;
    fs::path ba_out = ".";
    double ba_th = 0.6;
    DetectParams ba_params;
    batch_cmd->add_option("--manifest", ba_manifest, "CSV manifest: image,cx,cy[,gt[,mask]]")
        ->required();
    batch_cmd->add_option("--output-dir", ba_out, "Output directory")->capture_default_str();
    batch_cmd->add_option("--th", ba_th, "Fraction of nodes required inside a band to match")
        ->capture_default_str();
    add_detect_options(batch_cmd, ba_params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(detect_cmd)) {
            return cmd_detect(det_image, det_mask, det_pith, det_params, det_out);
        }
        if (app.got_subcommand(eval_cmd)) {
            return cmd_evaluate(ev_dt, ev_gt, ev_image, ev_pith, ev_th, ev_rays, ev_out);
        }
        if (app.got_subcommand(measure_cmd)) {
            return cmd_measure(me_rings, me_pith, me_rays, me_calib, me_out);
        }
        if (app.got_subcommand(calib_cmd)) {
            return cmd_calibrate(ca_data);
        }
        if (app.got_subcommand(batch_cmd)) {
            return cmd_batch(ba_manifest, ba_params, ba_th, ba_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;  // unreachable: a subcommand is required
}
