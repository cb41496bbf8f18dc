#pragma once

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "treering/annotation_io.hpp"
#include "treering/raster.hpp"
#include "treering/ring_detect.hpp"

namespace treering {

/// Partition of each ray into influence bands, one band per ground-truth
/// ring: band k on ray i is [boundaries[i][k], boundaries[i][k+1]), with
/// the inner edge of band 0 at the center and the outer edge of the last
/// band at the section bound. Band boundaries between consecutive rings
/// sit at the radial midpoint.
struct InfluenceMap {
    int nb_rings = 0;
    int nb_rays = 0;
    std::vector<std::vector<double>> boundaries;  // per ray, nb_rings + 1 values

    /// Ring whose influence band contains (ray, radius); -1 when the
    /// radius lies beyond the section bound.
    int band_of(int ray, double radius) const;
};

/// Detection <-> ground-truth pairing. Every detection index appears in
/// exactly one of matches / false_positives; every ground-truth index in
/// exactly one of matches / false_negatives.
struct Assignment {
    std::vector<std::pair<int, int>> matches;  // (detection index, gt index)
    std::vector<int> false_positives;          // detection indices
    std::vector<int> false_negatives;          // gt indices
};

/// Scores of one evaluation. precision / recall / fscore are absent (not
/// zero) when their denominator vanishes. rmse_per_ring is indexed by
/// ground-truth ring and absent at false negatives.
struct EvalReport {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> fscore;
    std::vector<std::optional<double>> rmse_per_ring;
    std::optional<double> rmse_overall;  // mean over matched pairs
    double exec_time = 0.0;              // filled by the caller, seconds
};

/// One radius per ray: distance from the web center to the outermost
/// crossing of the annotated polygon with that ray.
Ring sample_polygon_on_rays(const RingShape& shape, const SpiderWeb& web,
                            RingSource source = RingSource::GroundTruth);

/// Distance from the web center to the image border along each ray, used
/// as the outer limit of the outermost influence band.
std::vector<double> image_boundary_radii(const SpiderWeb& web, int width, int height);

/// Builds the per-ray band partition. Rings are sorted by mean radius
/// first; a ray where the sorted rings are not strictly radially ordered
/// raises CrossingGTRings. A section bound that fails to clear the
/// outermost ring on some ray is pushed just past it, so that ring's band
/// always contains its own radius.
InfluenceMap build_influence_map(const std::vector<Ring>& gt, const SpiderWeb& web,
                                 const std::vector<double>& section_bound);

/// Pairs detections with ground-truth rings: a detection is eligible for
/// ring g when strictly more than th * nb_rays of its nodes fall inside
/// g's influence band; among eligible detections the one with the
/// smallest radial RMSE wins. Leftover detections are false positives,
/// leftover ground-truth rings false negatives.
Assignment assign(const std::vector<Ring>& detections, const std::vector<Ring>& gt,
                  const InfluenceMap& map, double th = 0.6);

/// Root mean squared per-ray radial difference between two rings sampled
/// on the same web.
double rmse(const Ring& d, const Ring& g);

/// Counts and scores from an assignment; match_rmse holds one RMSE per
/// assignment.matches entry, in order.
EvalReport score(const Assignment& assignment, const std::vector<double>& match_rmse);

/// Per-ring mean across experts' annotations, matched by radial order.
/// All experts must annotate the same number of rings.
std::vector<Ring> consensus_gt(const std::vector<std::vector<Ring>>& expert_annotations,
                               const SpiderWeb& web);

/// RMS radial difference between one expert's rings and the consensus,
/// pooled over every node of every ring.
double expert_rms(const std::vector<Ring>& expert, const std::vector<Ring>& consensus);

/// Writes the five evaluation artifacts into out_dir:
///   dots_curve_and_rays.png   rays, ground truth and detections overlaid
///   influence_area.png        band boundaries around the ground truth
///   assigned_dt_gt.png        matched pairs share a color, FPs in white
///   rmse.png                  per-ring RMSE bars, empty where FN
///   heat_map_Spectral.png     signed radial error annuli (inward < 0)
void render_reports(const ColorImage& image, const std::vector<Ring>& gt,
                    const std::vector<Ring>& detections, const Assignment& assignment,
                    const std::vector<double>& match_rmse, const InfluenceMap& map,
                    const SpiderWeb& web, const std::filesystem::path& out_dir);

}  // namespace treering
