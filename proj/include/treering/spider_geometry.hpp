#pragma once

#include <optional>
#include <vector>

#include "treering/edge_detect.hpp"
#include "treering/geometry.hpp"

namespace treering {

/// Equiangular sampling frame anchored at the pith. Ray i leaves the
/// center at angle i * 2pi / nb_rays, measured from the +x axis toward +y.
/// With image coordinates (y down) that parameterization sweeps the rays
/// E -> S -> W -> N on screen; "counterclockwise" in this codebase always
/// means increasing ray index.
struct SpiderWeb {
    Point2 center;
    int nb_rays = 360;
    std::vector<double> ray_angles;

    double angle(int ray) const { return ray_angles[ray]; }
    Point2 direction(int ray) const {
        return Point2{std::cos(ray_angles[ray]), std::sin(ray_angles[ray])};
    }
    Point2 point_at(int ray, double radius) const {
        return center + radius * direction(ray);
    }
    int wrap(int ray) const {
        ray %= nb_rays;
        return ray < 0 ? ray + nb_rays : ray;
    }
};

SpiderWeb build_spider_web(Point2 center, int nb_rays = 360);

/// Crossing of an edge curve with one ray. Nodes synthesized by gap
/// interpolation (as opposed to measured edge crossings) carry the
/// `interpolated` flag so later stages can tell evidence from filler.
struct Node {
    int ray_index = 0;
    double radius = 0.0;
    double x = 0.0;
    double y = 0.0;
    Point2 gradient;
    bool interpolated = false;

    Point2 position() const { return Point2{x, y}; }
};

/// A run of nodes on consecutive rays, stored counterclockwise (increasing
/// ray index mod nb_rays): node k sits on ray (start_ray + k) % nb_rays.
/// Endpoint A is the clockwise extreme (first node), endpoint B the
/// counterclockwise extreme (last node). A chain covering every ray is
/// closed. At most one node per ray.
class Chain {
public:
    Chain() = default;
    Chain(std::vector<Node> nodes, int nb_rays, int id = -1);

    int id() const { return id_; }
    void set_id(int id) { id_ = id; }
    int nb_rays() const { return nb_rays_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    /// Nodes that are measured edge crossings, not interpolated filler.
    int evidence() const;
    int start_ray() const { return nodes_.front().ray_index; }
    bool is_closed() const { return size() == nb_rays_; }

    const Node& endpoint_a() const { return nodes_.front(); }
    const Node& endpoint_b() const { return nodes_.back(); }
    const std::vector<Node>& nodes() const { return nodes_; }

    bool covers_ray(int ray) const;
    /// Node on `ray`, or nullptr when the chain does not cross it.
    const Node* node_on_ray(int ray) const;
    double mean_radius() const;

private:
    std::vector<Node> nodes_;
    int nb_rays_ = 0;
    int id_ = -1;
};

/// Intersect an edge chain with the web. Every ray/polyline crossing
/// becomes a node; the run is split wherever a ray would receive a second
/// node (folded curves) or the angular direction reverses, so each output
/// chain honors the one-node-per-ray rule. Runs traversed clockwise are
/// reversed into canonical counterclockwise order; closed runs are rotated
/// to start at ray 0. Chains with fewer than two nodes are dropped.
std::vector<Chain> sample_chain(const EdgeChain& edge_chain, const SpiderWeb& web);

/// True iff some ray crosses both chains.
bool chains_intersect(const Chain& a, const Chain& b);

enum class Endpoint { A, B };
enum class RadialDir { Inward, Outward };

struct VisibleNeighbor {
    int chain_index;  // position in the `chains` span passed in
    Node node;        // that chain's node on the query ray
};

/// First chain met when leaving `ch`'s endpoint along its ray, toward the
/// center (Inward) or away from it (Outward). Nothing lies strictly
/// between the endpoint and the returned chain's node on that ray.
/// `chains` may include `ch` itself; it is skipped.
std::optional<VisibleNeighbor> visible_neighbors(const Chain& ch, Endpoint endpoint,
                                                 RadialDir direction,
                                                 const std::vector<Chain>& chains);

/// Nodes filling the rays strictly between src and dst along the shorter
/// angular path (exact ties resolved counterclockwise), radius linear in
/// angle. Endpoints excluded; output ordered from src toward dst.
std::vector<Node> interpolate_gap(const Node& src, const Node& dst, const SpiderWeb& web);

/// Same interpolation but always walking counterclockwise from src to dst,
/// whatever the gap size. Used when closing chains whose angular extent
/// already fixes which way around the gap lies.
std::vector<Node> interpolate_arc(const Node& src, const Node& dst, const SpiderWeb& web);

/// Radius of the outermost crossing of each ray with a closed polygon.
/// Throws CenterOutsidePolygon when some ray does not cross it at all.
std::vector<double> polygon_radii(const std::vector<Point2>& polygon, const SpiderWeb& web);

}  // namespace treering
