#include "treering/spider_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "treering/errors.hpp"

namespace treering {

namespace {

constexpr double kMinRadius = 1e-9;     // crossings at the center are ignored
constexpr double kDuplicateDist = 1e-6; // same crossing seen from two segments

}  // namespace

SpiderWeb build_spider_web(Point2 center, int nb_rays) {
    if (nb_rays < 3) {
        throw BadRayCount("spider web needs at least 3 rays, got " + std::to_string(nb_rays));
    }
    SpiderWeb web;
    web.center = center;
    web.nb_rays = nb_rays;
    web.ray_angles.resize(nb_rays);
    for (int i = 0; i < nb_rays; ++i) {
        web.ray_angles[i] = kTwoPi * i / nb_rays;
    }
    return web;
}

Chain::Chain(std::vector<Node> nodes, int nb_rays, int id)
    : nodes_(std::move(nodes)), nb_rays_(nb_rays), id_(id) {
    if (nodes_.empty()) {
        throw Error("Chain: node list is empty");
    }
    if (static_cast<int>(nodes_.size()) > nb_rays_) {
        throw Error("Chain: " + std::to_string(nodes_.size()) + " nodes exceed " +
                    std::to_string(nb_rays_) + " rays");
    }
    const int start = nodes_.front().ray_index;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const int expected = static_cast<int>((start + k) % nb_rays_);
        if (nodes_[k].ray_index != expected) {
            throw Error("Chain: node " + std::to_string(k) + " on ray " +
                        std::to_string(nodes_[k].ray_index) + ", expected ray " +
                        std::to_string(expected));
        }
    }
}

bool Chain::covers_ray(int ray) const {
    int offset = ray - start_ray();
    offset %= nb_rays_;
    if (offset < 0) offset += nb_rays_;
    return offset < size();
}

const Node* Chain::node_on_ray(int ray) const {
    int offset = ray - start_ray();
    offset %= nb_rays_;
    if (offset < 0) offset += nb_rays_;
    if (offset >= size()) return nullptr;
    return &nodes_[offset];
}

double Chain::mean_radius() const {
    double sum = 0.0;
    for (const Node& n : nodes_) sum += n.radius;
    return sum / size();
}

int Chain::evidence() const {
    int count = 0;
    for (const Node& n : nodes_) {
        if (!n.interpolated) ++count;
    }
    return count;
}

namespace {

struct Crossing {
    int ray = 0;
    double radius = 0.0;
    Point2 gradient;
};

// All ray crossings of one polyline segment, ordered along the segment.
void segment_crossings(const SpiderWeb& web, const EdgePoint& p, const EdgePoint& q,
                       bool last_open_segment, std::vector<Crossing>& out) {
    const Point2 pp{p.x, p.y};
    const Point2 qq{q.x, q.y};
    const Point2 u = pp - web.center;
    const Point2 v = qq - web.center;
    const double ru = norm(u);
    const double rv = norm(v);
    if (ru < kMinRadius && rv < kMinRadius) return;

    // Candidate rays: those inside the angular interval swept by the
    // segment (short way around), padded by one ray for rounding slack.
    int first_ray = 0;
    int last_ray = web.nb_rays - 1;
    const double a0 = polar_angle(u);
    double diff = polar_angle(v) - a0;
    while (diff > kPi) diff -= kTwoPi;
    while (diff <= -kPi) diff += kTwoPi;
    const bool through_center = std::abs(std::abs(diff) - kPi) < 1e-9 || ru < kMinRadius ||
                                rv < kMinRadius;
    if (!through_center) {
        const double step = kTwoPi / web.nb_rays;
        const double lo = (diff >= 0.0) ? a0 : a0 + diff;
        first_ray = static_cast<int>(std::floor(lo / step)) - 1;
        last_ray = static_cast<int>(std::ceil((lo + std::abs(diff)) / step)) + 1;
    }

    struct Hit {
        double s;
        Crossing crossing;
    };
    std::vector<Hit> hits;
    for (int k = first_ray; k <= last_ray; ++k) {
        const int ray = web.wrap(k);
        double t = 0.0;
        double s = 0.0;
        if (!ray_segment_intersect(web.center, web.direction(ray), pp, qq, t, s)) continue;
        if (t < kMinRadius) continue;
        // Half-open in s: the crossing at a shared vertex belongs to the
        // next segment, except at the dangling end of an open curve.
        if (s >= 1.0 && !last_open_segment) continue;
        hits.push_back(Hit{s, Crossing{ray, t, (s <= 0.5) ? p.gradient : q.gradient}});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.s != b.s) return a.s < b.s;
        return a.crossing.ray < b.crossing.ray;
    });
    for (Hit& h : hits) out.push_back(h.crossing);
}

Node make_node(const SpiderWeb& web, const Crossing& c) {
    const Point2 pos = web.point_at(c.ray, c.radius);
    return Node{c.ray, c.radius, pos.x, pos.y, c.gradient};
}

// Close out the current run of crossings as a Chain if it is long enough.
void flush_run(std::vector<Crossing>& run, int direction, const SpiderWeb& web,
               std::vector<Chain>& out) {
    if (run.size() >= 2) {
        if (direction < 0) std::reverse(run.begin(), run.end());
        if (static_cast<int>(run.size()) == web.nb_rays) {
            // Canonical start for closed chains.
            const auto at_ray0 = std::find_if(run.begin(), run.end(),
                                              [](const Crossing& c) { return c.ray == 0; });
            std::rotate(run.begin(), at_ray0, run.end());
        }
        std::vector<Node> nodes;
        nodes.reserve(run.size());
        for (const Crossing& c : run) nodes.push_back(make_node(web, c));
        out.emplace_back(std::move(nodes), web.nb_rays);
    }
    run.clear();
}

}  // namespace

std::vector<Chain> sample_chain(const EdgeChain& edge_chain, const SpiderWeb& web) {
    std::vector<Crossing> crossings;
    const std::size_t n = edge_chain.points.size();
    if (n >= 2) {
        const bool closed = edge_chain.is_closed();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const bool last_open_segment = !closed && (i + 2 == n);
            segment_crossings(web, edge_chain.points[i], edge_chain.points[i + 1],
                              last_open_segment, crossings);
        }
    }

    std::vector<Chain> result;
    std::vector<Crossing> run;
    int direction = 0;  // +1 counterclockwise, -1 clockwise, 0 undecided
    for (const Crossing& c : crossings) {
        if (run.empty()) {
            run.push_back(c);
            continue;
        }
        const Crossing& last = run.back();
        int d = c.ray - last.ray;
        d %= web.nb_rays;
        if (d < 0) d += web.nb_rays;
        if (d == 0) {
            if (std::abs(c.radius - last.radius) < kDuplicateDist) {
                continue;  // same geometric crossing reported twice (vertex on a ray)
            }
            flush_run(run, direction, web, result);  // folded back onto the same ray
            direction = 0;
            run.push_back(c);
            continue;
        }
        const int step = (d == 1) ? 1 : (d == web.nb_rays - 1 ? -1 : 0);
        const bool full = static_cast<int>(run.size()) == web.nb_rays;
        if (step == 0 || full || (direction != 0 && step != direction)) {
            flush_run(run, direction, web, result);
            direction = 0;
            run.push_back(c);
            continue;
        }
        direction = step;
        run.push_back(c);
    }
    flush_run(run, direction, web, result);
    return result;
}

bool chains_intersect(const Chain& a, const Chain& b) {
    const Chain& small = (a.size() <= b.size()) ? a : b;
    const Chain& large = (a.size() <= b.size()) ? b : a;
    if (large.is_closed()) return true;
    for (const Node& n : small.nodes()) {
        if (large.covers_ray(n.ray_index)) return true;
    }
    return false;
}

std::optional<VisibleNeighbor> visible_neighbors(const Chain& ch, Endpoint endpoint,
                                                 RadialDir direction,
                                                 const std::vector<Chain>& chains) {
    const Node& from = (endpoint == Endpoint::A) ? ch.endpoint_a() : ch.endpoint_b();
    const int ray = from.ray_index;
    std::optional<VisibleNeighbor> best;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        const Chain& other = chains[i];
        if (&other == &ch || (ch.id() >= 0 && other.id() == ch.id())) continue;
        const Node* node = other.node_on_ray(ray);
        if (node == nullptr) continue;
        if (direction == RadialDir::Inward) {
            if (node->radius >= from.radius) continue;
            if (!best || node->radius > best->node.radius) {
                best = VisibleNeighbor{static_cast<int>(i), *node};
            }
        } else {
            if (node->radius <= from.radius) continue;
            if (!best || node->radius < best->node.radius) {
                best = VisibleNeighbor{static_cast<int>(i), *node};
            }
        }
    }
    return best;
}

namespace {

std::vector<Node> interpolate_steps(const Node& src, const Node& dst, const SpiderWeb& web,
                                    int gap, int step) {
    std::vector<Node> nodes;
    nodes.reserve(gap > 0 ? gap - 1 : 0);
    for (int k = 1; k < gap; ++k) {
        const int ray = web.wrap(src.ray_index + step * k);
        const double radius = src.radius + (dst.radius - src.radius) * k / gap;
        const Point2 pos = web.point_at(ray, radius);
        // Interpolated nodes get a radially outward unit gradient: the
        // dark-to-light orientation every surviving real node already has.
        nodes.push_back(Node{ray, radius, pos.x, pos.y, web.direction(ray), true});
    }
    return nodes;
}

}  // namespace

std::vector<Node> interpolate_gap(const Node& src, const Node& dst, const SpiderWeb& web) {
    int forward = dst.ray_index - src.ray_index;
    forward %= web.nb_rays;
    if (forward < 0) forward += web.nb_rays;
    if (forward == 0) {
        throw Error("interpolate_gap: endpoints lie on the same ray " +
                    std::to_string(src.ray_index));
    }
    const int backward = web.nb_rays - forward;
    // Shorter angular path; an exact tie goes counterclockwise.
    if (forward <= backward) {
        return interpolate_steps(src, dst, web, forward, +1);
    }
    return interpolate_steps(src, dst, web, backward, -1);
}

std::vector<Node> interpolate_arc(const Node& src, const Node& dst, const SpiderWeb& web) {
    int forward = dst.ray_index - src.ray_index;
    forward %= web.nb_rays;
    if (forward < 0) forward += web.nb_rays;
    if (forward == 0) {
        throw Error("interpolate_arc: endpoints lie on the same ray " +
                    std::to_string(src.ray_index));
    }
    return interpolate_steps(src, dst, web, forward, +1);
}

std::vector<double> polygon_radii(const std::vector<Point2>& polygon, const SpiderWeb& web) {
    if (polygon.size() < 3) {
        throw DegenerateRing("polygon needs at least 3 points, got " +
                             std::to_string(polygon.size()));
    }
    std::vector<double> radii(web.nb_rays, -1.0);
    for (int ray = 0; ray < web.nb_rays; ++ray) {
        const Point2 dir = web.direction(ray);
        double best = -1.0;
        for (std::size_t i = 0; i < polygon.size(); ++i) {
            const Point2& p = polygon[i];
            const Point2& q = polygon[(i + 1) % polygon.size()];
            double t = 0.0;
            double s = 0.0;
            if (ray_segment_intersect(web.center, dir, p, q, t, s) && t > best) {
                best = t;
            }
        }
        if (best <= 0.0) {
            throw CenterOutsidePolygon("ray " + std::to_string(ray) +
                                       " does not cross the polygon; the center is outside it");
        }
        radii[ray] = best;
    }
    return radii;
}

}  // namespace treering
