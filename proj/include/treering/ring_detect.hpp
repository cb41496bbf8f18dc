#pragma once

#include <span>
#include <vector>

#include "treering/raster.hpp"
#include "treering/spider_geometry.hpp"

namespace treering {

/// Knobs of the detection pipeline. Length-like thresholds are in pixels
/// of the square working frame, not of the original image.
struct DetectParams {
    double sigma = 3.0;            // edge detector scale
    int nb_rays = 360;             // spider web resolution
    double angle_tol_deg = 30.0;   // gradient-vs-ray filter; > tol removes
    double th_rt = 2.0;            // radial tolerance criterion, px
    double th_ds = 2.0;            // similar-distribution criterion, sigmas
    double th_rd = 2.0;            // derivative-regularity factor
    int n_nodes = 20;              // nodes examined near each joining endpoint
    int relax_iters = 3;           // connect passes with relaxed thresholds
    double relax_factor = 1.5;     // applied to th_rt / th_rd per pass
    int min_chain_nodes = 2;       // shorter chains dropped after filtering
    double min_ring_coverage = 0.9;  // fraction of rays needed to close a ring
    int working_size = 1500;       // square resize target for processing
    double edge_low_pct = 70.0;    // hysteresis low threshold percentile
    double edge_high_pct = 85.0;   // hysteresis high threshold percentile
};

enum class RingSource { Detected, GroundTruth };

/// Closed ring sampled on every ray of a web: polygon[i] lies on ray i at
/// distance radii[i] from the center.
struct Ring {
    std::vector<double> radii;
    std::vector<Point2> polygon;
    RingSource source = RingSource::Detected;

    double mean_radius() const;
};

/// Builds the polygon from the radii; every radius must be positive.
Ring make_ring(std::vector<double> radii, const SpiderWeb& web, RingSource source);

/// Drops every node whose gradient deviates from its ray direction by
/// strictly more than angle_tol_deg (exactly the tolerance is kept) and
/// splits chains at the removals. Ring edges pass because wood transitions
/// point radially outward; radial crack edges are nearly perpendicular to
/// their rays and disappear. Pieces shorter than min_chain_nodes are
/// dropped.
std::vector<Chain> filter_by_gradient(const std::vector<Chain>& chains, const SpiderWeb& web,
                                      double angle_tol_deg, int min_chain_nodes = 2);

/// Connection criteria. All three evaluate the junction that would join
/// cand_a's endpoint B to cand_b's endpoint A (counterclockwise from a
/// to b), refereed by a support chain that crosses the neighborhood.

/// (a) Radial tolerance: both endpoints keep nearly the same radial
/// offset from the support, |dR_a - dR_b| < th_rt.
bool radial_tol_ok(const Chain& cand_a, const Chain& cand_b, const Chain& support, double th_rt);

/// (b) Similar radial distributions: offsets from the support over up to
/// n_nodes nodes next to each joining endpoint form overlapping ranges
/// [mean - th_ds*sd, mean + th_ds*sd].
bool similar_radial_dist_ok(const Chain& cand_a, const Chain& cand_b, const Chain& support,
                            double th_ds, int n_nodes);

/// (c) Derivative regularity: centered radius derivatives across the
/// interpolated gap (junction endpoints included) stay within th_rd times
/// the maximum derivative found inside the chains near the junction.
bool regular_deriv_ok(const Chain& cand_a, const Chain& cand_b, std::span<const Node> gap_nodes,
                      double th_rd, int n_nodes);

/// RegularDeriv and (SimilarRadialDist or RadialTol). Returns false when
/// the chains share a ray (joining them would fold the curve).
bool connectivity_goodness(const Chain& cand_a, const Chain& cand_b, const Chain& support,
                           const SpiderWeb& web, const DetectParams& params);

/// Iteratively merges chains into longer ring candidates: largest chain
/// referees as support, visible neighbor chains are connected pairwise
/// when connectivity_goodness holds, then thresholds are relaxed and the
/// process repeats relax_iters times.
std::vector<Chain> connect_chains(const std::vector<Chain>& chains, const SpiderWeb& web,
                                  const DetectParams& params);

/// Closes chains covering at least min_ring_coverage of the rays by polar
/// interpolation across their remaining gap; discards the rest. Emitted
/// rings are strictly nested (overlapping or crossing candidates are
/// deduplicated keeping the longer chain) and sorted by mean radius.
std::vector<Ring> close_rings(const std::vector<Chain>& chains, const SpiderWeb& web,
                              const DetectParams& params);

/// Whole pipeline: preprocess to the working frame, detect sub-pixel
/// edges, sample them on the spider web, filter by gradient direction,
/// connect, close, and map the rings back to original image coordinates.
std::vector<Ring> detect(const ColorImage& image, Point2 pith, const DetectParams& params);

/// Same pipeline with a mask applied first (background forced to white).
std::vector<Ring> detect(const ColorImage& image, const GrayImage& mask, Point2 pith,
                         const DetectParams& params);

}  // namespace treering
