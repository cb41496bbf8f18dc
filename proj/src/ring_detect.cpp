#include "treering/ring_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "treering/edge_detect.hpp"
#include "treering/errors.hpp"

namespace treering {

double Ring::mean_radius() const {
    if (radii.empty()) return 0.0;
    double sum = 0.0;
    for (double r : radii) sum += r;
    return sum / static_cast<double>(radii.size());
}

Ring make_ring(std::vector<double> radii, const SpiderWeb& web, RingSource source) {
    if (static_cast<int>(radii.size()) != web.nb_rays) {
        throw DimensionMismatch("ring has " + std::to_string(radii.size()) + " radii for a " +
                                std::to_string(web.nb_rays) + "-ray web");
    }
    Ring ring;
    ring.source = source;
    ring.polygon.reserve(radii.size());
    for (int i = 0; i < web.nb_rays; ++i) {
        if (!(radii[i] > 0.0)) {
            throw DegenerateRing("ring radius on ray " + std::to_string(i) + " is not positive");
        }
        ring.polygon.push_back(web.point_at(i, radii[i]));
    }
    ring.radii = std::move(radii);
    return ring;
}

std::vector<Chain> filter_by_gradient(const std::vector<Chain>& chains, const SpiderWeb& web,
                                      double angle_tol_deg, int min_chain_nodes) {
    // Tiny slack so a gradient at exactly the tolerance survives rounding.
    const double tol = deg_to_rad(angle_tol_deg) + 1e-12;
    std::vector<Chain> out;
    for (const Chain& ch : chains) {
        std::vector<char> keep(ch.size(), 0);
        bool all_kept = true;
        for (int k = 0; k < ch.size(); ++k) {
            const Node& n = ch.nodes()[k];
            const double g = norm(n.gradient);
            bool ok = false;
            if (g > 0.0) {
                const double c =
                    std::clamp(dot(n.gradient, web.direction(n.ray_index)) / g, -1.0, 1.0);
                ok = std::acos(c) <= tol;
            }
            keep[k] = ok ? 1 : 0;
            all_kept = all_kept && ok;
        }
        if (all_kept) {
            out.push_back(ch);
            continue;
        }
        std::vector<std::vector<Node>> runs;
        std::vector<Node> run;
        for (int k = 0; k < ch.size(); ++k) {
            if (keep[k]) {
                run.push_back(ch.nodes()[k]);
            } else if (!run.empty()) {
                runs.push_back(std::move(run));
                run.clear();
            }
        }
        if (!run.empty()) runs.push_back(std::move(run));
        // In a closed chain the node list wraps around, so a surviving tail
        // continues into a surviving head: stitch them back together.
        if (ch.is_closed() && runs.size() >= 2 && keep.front() && keep.back()) {
            std::vector<Node> joined = std::move(runs.back());
            runs.pop_back();
            joined.insert(joined.end(), runs.front().begin(), runs.front().end());
            runs.front() = std::move(joined);
        }
        for (auto& nodes : runs) {
            if (static_cast<int>(nodes.size()) >= min_chain_nodes) {
                out.emplace_back(std::move(nodes), web.nb_rays);
            }
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].set_id(static_cast<int>(i));
    return out;
}

namespace {

// Radial offset of a node from the support chain on the node's ray.
std::optional<double> support_offset(const Node& node, const Chain& support) {
    const Node* s = support.node_on_ray(node.ray_index);
    if (s == nullptr) return std::nullopt;
    return node.radius - s->radius;
}

double endpoint_offset(const Node& endpoint, const Chain& support) {
    const auto off = support_offset(endpoint, support);
    if (!off) {
        throw MissingSupportNode("support chain has no node on ray " +
                                 std::to_string(endpoint.ray_index));
    }
    return *off;
}

struct OffsetRange {
    double lo = 0.0;
    double hi = 0.0;
};

// Mean +/- th_ds standard deviations of the radial offsets to the support
// over the n_nodes nodes adjacent to the joining end of the chain.
std::optional<OffsetRange> offset_range(const Chain& ch, bool from_back, const Chain& support,
                                        double th_ds, int n_nodes) {
    const auto& nodes = ch.nodes();
    const int count = std::min(n_nodes, ch.size());
    std::vector<double> offsets;
    offsets.reserve(count);
    for (int k = 0; k < count; ++k) {
        const Node& n = from_back ? nodes[nodes.size() - 1 - k] : nodes[k];
        if (const auto off = support_offset(n, support)) offsets.push_back(*off);
    }
    if (offsets.empty()) return std::nullopt;
    double mean = 0.0;
    for (double v : offsets) mean += v;
    mean /= static_cast<double>(offsets.size());
    double var = 0.0;
    for (double v : offsets) var += (v - mean) * (v - mean);
    var /= static_cast<double>(offsets.size());
    const double sd = std::sqrt(var);
    return OffsetRange{mean - th_ds * sd, mean + th_ds * sd};
}

// Shared body of regular_deriv_ok. connect_chains sets allow_one_sided so
// two-node chains (which have no centered derivative) still provide a
// baseline through their plain radius difference.
bool regular_deriv(const Chain& cand_a, const Chain& cand_b, std::span<const Node> gap_nodes,
                   double th_rd, int n_nodes, bool allow_one_sided) {
    // Virtual connected chain: tail of a, the gap, head of b.
    const int tail = std::min(n_nodes, cand_a.size());
    const int head = std::min(n_nodes, cand_b.size());
    std::vector<double> r;
    r.reserve(tail + gap_nodes.size() + head);
    for (int k = tail; k >= 1; --k) {
        r.push_back(cand_a.nodes()[cand_a.size() - k].radius);
    }
    const int new_lo = static_cast<int>(r.size()) - 1;  // index of a's endpoint B
    for (const Node& n : gap_nodes) r.push_back(n.radius);
    const int new_hi = static_cast<int>(r.size());      // index of b's endpoint A
    for (int k = 0; k < head; ++k) {
        r.push_back(cand_b.nodes()[k].radius);
    }
    double max_new = 0.0;
    for (int s = std::max(new_lo, 1); s <= std::min<int>(new_hi, r.size() - 2); ++s) {
        max_new = std::max(max_new, std::abs(r[s + 1] - r[s - 1]) / 2.0);
    }

    bool found = false;
    double max_existing = 0.0;
    const auto scan = [&](const Chain& ch, bool from_back) {
        const auto& nodes = ch.nodes();
        const int count = std::min(n_nodes, ch.size());
        int lo = from_back ? ch.size() - count : 0;
        int hi = from_back ? ch.size() - 1 : count - 1;
        lo = std::max(lo, 1);
        hi = std::min(hi, ch.size() - 2);
        for (int j = lo; j <= hi; ++j) {
            max_existing =
                std::max(max_existing, std::abs(nodes[j + 1].radius - nodes[j - 1].radius) / 2.0);
            found = true;
        }
    };
    scan(cand_a, true);
    scan(cand_b, false);
    if (!found) {
        if (!allow_one_sided) {
            throw ChainTooShort("no chain has 3 nodes, centered derivative undefined");
        }
        const auto one_sided = [&](const Chain& ch) {
            const auto& nodes = ch.nodes();
            for (int j = 0; j + 1 < ch.size(); ++j) {
                max_existing =
                    std::max(max_existing, std::abs(nodes[j + 1].radius - nodes[j].radius));
                found = true;
            }
        };
        one_sided(cand_a);
        one_sided(cand_b);
    }
    if (!found) return false;
    return max_new <= th_rd * max_existing + 1e-12;
}

}  // namespace

bool radial_tol_ok(const Chain& cand_a, const Chain& cand_b, const Chain& support, double th_rt) {
    const double da = endpoint_offset(cand_a.endpoint_b(), support);
    const double db = endpoint_offset(cand_b.endpoint_a(), support);
    return std::abs(da - db) < th_rt;
}

bool similar_radial_dist_ok(const Chain& cand_a, const Chain& cand_b, const Chain& support,
                            double th_ds, int n_nodes) {
    const auto ra = offset_range(cand_a, true, support, th_ds, n_nodes);
    const auto rb = offset_range(cand_b, false, support, th_ds, n_nodes);
    if (!ra || !rb) {
        throw MissingSupportNode("support shares no ray with a candidate near the junction");
    }
    return ra->lo <= rb->hi && rb->lo <= ra->hi;
}

bool regular_deriv_ok(const Chain& cand_a, const Chain& cand_b, std::span<const Node> gap_nodes,
                      double th_rd, int n_nodes) {
    return regular_deriv(cand_a, cand_b, gap_nodes, th_rd, n_nodes, false);
}

namespace {

// The three-criteria decision without the fold test; shared between the
// pairwise goodness and chain self-closure (where cand_a == cand_b by
// design).
bool goodness_core(const Chain& cand_a, const Chain& cand_b, const Chain& support,
                   const SpiderWeb& web, const DetectParams& params) {
    bool rt = false;
    bool ds = false;
    int undefined = 0;
    try {
        rt = radial_tol_ok(cand_a, cand_b, support, params.th_rt);
    } catch (const MissingSupportNode&) {
        ++undefined;
    }
    if (!rt) {
        try {
            ds = similar_radial_dist_ok(cand_a, cand_b, support, params.th_ds, params.n_nodes);
        } catch (const MissingSupportNode&) {
            ++undefined;
        }
    }
    if (undefined == 2) {
        throw MissingSupportNode("support shares no ray with either junction neighborhood");
    }
    if (!rt && !ds) return false;
    const std::vector<Node> gap = interpolate_arc(cand_a.endpoint_b(), cand_b.endpoint_a(), web);
    return regular_deriv(cand_a, cand_b, gap, params.th_rd, params.n_nodes, true);
}

}  // namespace

bool connectivity_goodness(const Chain& cand_a, const Chain& cand_b, const Chain& support,
                           const SpiderWeb& web, const DetectParams& params) {
    if (chains_intersect(cand_a, cand_b)) return false;  // joining would fold the curve
    return goodness_core(cand_a, cand_b, support, web, params);
}

namespace {

const Chain* find_by_id(const std::vector<Chain>& work, int id) {
    for (const Chain& c : work) {
        if (c.id() == id) return &c;
    }
    return nullptr;
}

// A third chain sitting radially between the two junction endpoints on any
// gap ray forbids the connection.
bool junction_blocked(const std::vector<Chain>& work, const Chain& a, const Chain& b,
                      const SpiderWeb& web) {
    const Node& ea = a.endpoint_b();
    const Node& eb = b.endpoint_a();
    const double lo = std::min(ea.radius, eb.radius);
    const double hi = std::max(ea.radius, eb.radius);
    int forward = eb.ray_index - ea.ray_index;
    forward %= web.nb_rays;
    if (forward < 0) forward += web.nb_rays;
    for (int k = 1; k < forward; ++k) {
        const int ray = web.wrap(ea.ray_index + k);
        for (const Chain& other : work) {
            if (other.id() == a.id() || other.id() == b.id()) continue;
            const Node* n = other.node_on_ray(ray);
            if (n != nullptr && n->radius >= lo && n->radius <= hi) return true;
        }
    }
    return false;
}

Chain merge_pair(const Chain& a, const Chain& b, const SpiderWeb& web, int id) {
    std::vector<Node> nodes(a.nodes());
    if (web.wrap(b.endpoint_a().ray_index - a.endpoint_b().ray_index) != 1) {
        const std::vector<Node> gap = interpolate_arc(a.endpoint_b(), b.endpoint_a(), web);
        nodes.insert(nodes.end(), gap.begin(), gap.end());
    }
    nodes.insert(nodes.end(), b.nodes().begin(), b.nodes().end());
    return Chain(std::move(nodes), web.nb_rays, id);
}

// One merge attempt among the chains on `side` of the support. Returns
// true when a pair was merged (the caller then rebuilds the candidate
// set, since visibility may have changed).
bool try_merge_once(std::vector<Chain>& work, int support_id, RadialDir side,
                    const SpiderWeb& web, const DetectParams& p, int& next_id) {
    const Chain* support = find_by_id(work, support_id);
    if (support == nullptr) return false;

    // Candidates: chains on the requested side that can see the support
    // along at least one endpoint ray with nothing in between.
    const RadialDir look = (side == RadialDir::Inward) ? RadialDir::Outward : RadialDir::Inward;
    std::vector<int> cands;
    for (std::size_t i = 0; i < work.size(); ++i) {
        const Chain& c = work[i];
        if (c.id() == support_id || c.is_closed()) continue;
        const auto va = visible_neighbors(c, Endpoint::A, look, work);
        if (va && work[va->chain_index].id() == support_id) {
            cands.push_back(static_cast<int>(i));
            continue;
        }
        const auto vb = visible_neighbors(c, Endpoint::B, look, work);
        if (vb && work[vb->chain_index].id() == support_id) {
            cands.push_back(static_cast<int>(i));
        }
    }
    if (cands.empty()) return false;

    // A chain may close onto itself only once its measured nodes already
    // span the ring coverage threshold; otherwise a short arc would balloon
    // into a fabricated full circle. The same budget bounds any single
    // pairwise junction: a gap wider than the whole closure allowance can
    // never belong to a sufficiently evidenced ring, and gluing far-apart
    // fragments with long flat interpolation is how phantom rings form.
    const int self_close_min =
        static_cast<int>(std::ceil(p.min_ring_coverage * web.nb_rays));
    const int gap_cap = web.nb_rays - self_close_min;

    // Angular sweep over the candidates' counterclockwise endpoints.
    std::sort(cands.begin(), cands.end(), [&](int x, int y) {
        const Chain& cx = work[x];
        const Chain& cy = work[y];
        if (cx.endpoint_b().ray_index != cy.endpoint_b().ray_index) {
            return cx.endpoint_b().ray_index < cy.endpoint_b().ray_index;
        }
        return cx.id() < cy.id();
    });

    for (int a_idx : cands) {
        const Chain& a = work[a_idx];
        // Partners ordered by how far counterclockwise their A endpoint
        // sits from a's B endpoint.
        struct Partner {
            int idx;
            int gap;
        };
        std::vector<Partner> partners;
        for (int b_idx : cands) {
            if (b_idx == a_idx) {
                if (a.evidence() < self_close_min) continue;  // self-closure candidate
            }
            int gap = work[b_idx].endpoint_a().ray_index - a.endpoint_b().ray_index;
            gap %= web.nb_rays;
            if (gap < 0) gap += web.nb_rays;
            if (gap > gap_cap) continue;
            partners.push_back(Partner{b_idx, gap});
        }
        std::sort(partners.begin(), partners.end(), [&](const Partner& x, const Partner& y) {
            if (x.gap != y.gap) return x.gap < y.gap;
            return work[x.idx].id() < work[y.idx].id();
        });

        int best_idx = -1;
        int best_gap = -1;
        double best_delta = std::numeric_limits<double>::infinity();
        for (const Partner& partner : partners) {
            if (best_idx >= 0 && partner.gap > best_gap) break;  // only tie-break same gap
            const Chain& b = work[partner.idx];
            const bool self = (partner.idx == a_idx);
            if (!self && chains_intersect(a, b)) continue;
            if (junction_blocked(work, a, b, web)) continue;
            bool good = false;
            try {
                good = self ? goodness_core(a, a, *support, web, p)
                            : connectivity_goodness(a, b, *support, web, p);
            } catch (const MissingSupportNode&) {
                continue;
            } catch (const ChainTooShort&) {
                continue;
            }
            if (!good) continue;
            // Radial agreement tie-break between passers at the same gap.
            double delta = std::numeric_limits<double>::infinity();
            const auto da = support_offset(a.endpoint_b(), *support);
            const auto db = support_offset(b.endpoint_a(), *support);
            if (da && db) delta = std::abs(*da - *db);
            if (best_idx < 0 || delta < best_delta) {
                best_idx = partner.idx;
                best_gap = partner.gap;
                best_delta = delta;
            }
        }
        if (best_idx == a_idx) {
            std::vector<Node> nodes(a.nodes());
            const std::vector<Node> gap =
                interpolate_arc(a.endpoint_b(), a.endpoint_a(), web);
            nodes.insert(nodes.end(), gap.begin(), gap.end());
            Chain closed(std::move(nodes), web.nb_rays, next_id++);
            work.erase(work.begin() + a_idx);
            work.push_back(std::move(closed));
            return true;
        }
        if (best_idx >= 0) {
            Chain merged = merge_pair(a, work[best_idx], web, next_id++);
            const int low = std::min(a_idx, best_idx);
            const int high = std::max(a_idx, best_idx);
            work.erase(work.begin() + high);
            work.erase(work.begin() + low);
            work.push_back(std::move(merged));
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<Chain> connect_chains(const std::vector<Chain>& chains, const SpiderWeb& web,
                                  const DetectParams& params) {
    std::vector<Chain> work(chains);
    for (std::size_t i = 0; i < work.size(); ++i) work[i].set_id(static_cast<int>(i));
    int next_id = static_cast<int>(work.size());

    DetectParams p = params;
    for (int iter = 0; iter < params.relax_iters; ++iter) {
        if (iter > 0) {
            p.th_rt *= params.relax_factor;
            p.th_rd *= params.relax_factor;
            p.th_ds += 0.5;
        }
        std::set<int> done;
        while (true) {
            // Largest not-yet-processed chain referees next; merged chains
            // carry fresh ids, so they can serve as supports afterwards.
            std::sort(work.begin(), work.end(), [](const Chain& x, const Chain& y) {
                if (x.size() != y.size()) return x.size() > y.size();
                return x.id() < y.id();
            });
            int support_id = -1;
            for (const Chain& c : work) {
                if (done.find(c.id()) == done.end()) {
                    support_id = c.id();
                    break;
                }
            }
            if (support_id < 0) break;
            for (const RadialDir side : {RadialDir::Inward, RadialDir::Outward}) {
                while (try_merge_once(work, support_id, side, web, p, next_id)) {
                }
            }
            done.insert(support_id);
        }
    }
    return work;
}

std::vector<Ring> close_rings(const std::vector<Chain>& chains, const SpiderWeb& web,
                              const DetectParams& params) {
    const int needed =
        static_cast<int>(std::ceil(params.min_ring_coverage * web.nb_rays));
    std::vector<const Chain*> sources;
    for (const Chain& ch : chains) {
        // Coverage counts measured nodes only. A merged chain can carry any
        // number of interpolated gap nodes; letting those count would close
        // rings that are mostly invented.
        if (ch.evidence() >= needed) sources.push_back(&ch);
    }
    // Chains with more measured nodes are more trustworthy and win
    // deduplication.
    std::sort(sources.begin(), sources.end(), [](const Chain* x, const Chain* y) {
        if (x->evidence() != y->evidence()) return x->evidence() > y->evidence();
        return x->id() < y->id();
    });

    std::vector<std::vector<double>> accepted;
    for (const Chain* ch : sources) {
        std::vector<double> radii(web.nb_rays, 0.0);
        for (const Node& n : ch->nodes()) radii[n.ray_index] = n.radius;
        if (!ch->is_closed()) {
            for (const Node& n : interpolate_arc(ch->endpoint_b(), ch->endpoint_a(), web)) {
                radii[n.ray_index] = n.radius;
            }
        }
        // Reject candidates that touch (< 1 px somewhere) or cross an
        // already accepted ring, so emitted rings stay strictly nested.
        bool ok = true;
        for (const auto& other : accepted) {
            double min_abs = std::numeric_limits<double>::infinity();
            bool above = false;
            bool below = false;
            for (int i = 0; i < web.nb_rays; ++i) {
                const double d = radii[i] - other[i];
                min_abs = std::min(min_abs, std::abs(d));
                if (d > 0.0) above = true;
                if (d < 0.0) below = true;
            }
            if (min_abs < 1.0 || (above && below)) {
                ok = false;
                break;
            }
        }
        if (ok) accepted.push_back(std::move(radii));
    }

    std::vector<Ring> rings;
    rings.reserve(accepted.size());
    for (auto& radii : accepted) {
        rings.push_back(make_ring(std::move(radii), web, RingSource::Detected));
    }
    std::sort(rings.begin(), rings.end(),
              [](const Ring& x, const Ring& y) { return x.mean_radius() < y.mean_radius(); });
    return rings;
}

std::vector<Ring> detect(const ColorImage& image, Point2 pith, const DetectParams& params) {
    const PreprocessResult pre = preprocess(image, pith, params.working_size);
    const GradientField grad = gaussian_gradient(pre.image, params.sigma);
    const double low = magnitude_percentile(grad, params.edge_low_pct);
    const double high = magnitude_percentile(grad, params.edge_high_pct);
    const std::vector<EdgeChain> edges = detect_edges(grad, low, high);

    const SpiderWeb web = build_spider_web(pre.pith, params.nb_rays);
    std::vector<Chain> chains;
    for (const EdgeChain& edge : edges) {
        std::vector<Chain> sampled = sample_chain(edge, web);
        for (Chain& c : sampled) chains.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < chains.size(); ++i) chains[i].set_id(static_cast<int>(i));

    const std::vector<Chain> filtered =
        filter_by_gradient(chains, web, params.angle_tol_deg, params.min_chain_nodes);
    const std::vector<Chain> connected = connect_chains(filtered, web, params);
    const std::vector<Ring> working = close_rings(connected, web, params);

    // Back to original coordinates: undo the working resize and resample
    // the polygons on a web anchored at the original pith.
    const SpiderWeb original = build_spider_web(pith, params.nb_rays);
    std::vector<Ring> rings;
    rings.reserve(working.size());
    for (const Ring& ring : working) {
        std::vector<Point2> polygon;
        polygon.reserve(ring.polygon.size());
        for (const Point2& p : ring.polygon) {
            polygon.push_back(Point2{p.x / pre.sx, p.y / pre.sy});
        }
        rings.push_back(make_ring(polygon_radii(polygon, original), original,
                                  RingSource::Detected));
    }
    return rings;
}

std::vector<Ring> detect(const ColorImage& image, const GrayImage& mask, Point2 pith,
                         const DetectParams& params) {
    ColorImage masked = image;
    apply_mask(masked, mask);
    return detect(masked, pith, params);
}

}  // namespace treering
