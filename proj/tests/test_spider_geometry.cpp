#include <treering/errors.hpp>
#include <treering/spider_geometry.hpp>

#include <builders.hpp>
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace treering;
using synth::circle_edge;
using synth::flat_arc;
using synth::make_arc;

TEST_CASE("build_spider_web: four rays at the cardinal angles") {
    const SpiderWeb web = build_spider_web({100, 100}, 4);
    REQUIRE(web.ray_angles.size() == 4);
    CHECK(web.angle(0) == doctest::Approx(0.0));
    CHECK(web.angle(1) == doctest::Approx(kPi / 2));
    CHECK(web.angle(2) == doctest::Approx(kPi));
    CHECK(web.angle(3) == doctest::Approx(3 * kPi / 2));
}

TEST_CASE("build_spider_web: 360 rays spaced one degree") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    REQUIRE(web.ray_angles.size() == 360);
    for (int i = 0; i < 360; ++i) CHECK(web.angle(i) == doctest::Approx(deg_to_rad(i)));
    for (int i = 1; i < 360; ++i) CHECK(web.angle(i) > web.angle(i - 1));
}

TEST_CASE("build_spider_web rejects fewer than 3 rays") {
    CHECK_THROWS_AS(build_spider_web({0, 0}, 2), BadRayCount);
    CHECK_THROWS_AS(build_spider_web({0, 0}, 0), BadRayCount);
}

TEST_CASE("chain constructor validates the node run") {
    const SpiderWeb web = build_spider_web({0, 0}, 8);
    // Valid wraparound run 6,7,0,1.
    const Chain ok = make_arc(web, 6, 4, [](int) { return 5.0; });
    CHECK(ok.size() == 4);
    CHECK(ok.start_ray() == 6);
    CHECK(ok.endpoint_a().ray_index == 6);
    CHECK(ok.endpoint_b().ray_index == 1);
    CHECK(ok.covers_ray(0));
    CHECK_FALSE(ok.covers_ray(3));
    REQUIRE(ok.node_on_ray(7) != nullptr);
    CHECK(ok.node_on_ray(7)->radius == doctest::Approx(5.0));
    CHECK(ok.node_on_ray(3) == nullptr);
    CHECK(ok.mean_radius() == doctest::Approx(5.0));

    // Non-consecutive rays must be rejected.
    std::vector<Node> gap = {ok.nodes()[0], ok.nodes()[2]};
    CHECK_THROWS_AS(Chain(gap, 8), Error);
}

TEST_CASE("sample_chain: circle around the center covers every ray at radius r") {
    const SpiderWeb web = build_spider_web({250, 250}, 360);
    const auto chains = sample_chain(circle_edge({250, 250}, 90.0, 2000), web);
    REQUIRE(chains.size() == 1);
    const Chain& c = chains[0];
    CHECK(c.is_closed());
    CHECK(c.size() == 360);
    CHECK(c.start_ray() == 0);  // canonical start for closed chains
    for (const Node& n : c.nodes()) {
        CHECK(n.radius == doctest::Approx(90.0).epsilon(1e-3));
        // Node position must equal center + radius * ray direction.
        const Point2 expect = web.point_at(n.ray_index, n.radius);
        CHECK(std::abs(n.x - expect.x) <= 1e-6);
        CHECK(std::abs(n.y - expect.y) <= 1e-6);
    }
}

TEST_CASE("sample_chain: short crossing yields the exact ray-0 radius") {
    // A polyline crossing rays 359, 0, 1 at distance about 40; the segment
    // across ray 0 runs vertically through (40 + eps) so the intersection
    // radius is exact. One-node chains are dropped by contract, so the
    // crossing is verified on the middle node of a three-ray chain.
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    EdgeChain edge;
    for (double deg : {-1.5, -0.5, 0.5, 1.5}) {
        EdgePoint p;
        p.x = 40.0 * std::cos(deg_to_rad(deg));
        p.y = 40.0 * std::sin(deg_to_rad(deg));
        p.gradient = {1.0, 0.0};
        edge.points.push_back(p);
    }
    const auto chains = sample_chain(edge, web);
    REQUIRE(chains.size() == 1);
    REQUIRE(chains[0].size() == 3);
    const Node* on_zero = chains[0].node_on_ray(0);
    REQUIRE(on_zero != nullptr);
    // The chord between +-0.5 degrees crosses ray 0 at r = 40*cos(0.5 deg).
    CHECK(on_zero->radius == doctest::Approx(40.0 * std::cos(deg_to_rad(0.5))).epsilon(1e-9));
}

TEST_CASE("sample_chain: polyline between two rays produces nothing") {
    const SpiderWeb web = build_spider_web({0, 0}, 8);  // rays every 45 degrees
    EdgeChain edge;
    for (double t = 0.0; t <= 1.0; t += 0.25) {
        EdgePoint p;
        p.x = 30.0 * std::cos(deg_to_rad(10.0 + 20.0 * t));
        p.y = 30.0 * std::sin(deg_to_rad(10.0 + 20.0 * t));
        edge.points.push_back(p);
    }
    CHECK(sample_chain(edge, web).empty());
}

TEST_CASE("sample_chain: folded curve splits instead of double-booking a ray") {
    // Out along +x at radius 50, hairpin, back across the same rays at 70.
    const SpiderWeb web = build_spider_web({0, 0}, 90);  // 4-degree spacing
    EdgeChain edge;
    auto push = [&](double deg, double r) {
        EdgePoint p;
        p.x = r * std::cos(deg_to_rad(deg));
        p.y = r * std::sin(deg_to_rad(deg));
        edge.points.push_back(p);
    };
    for (double deg = -10.0; deg <= 10.0; deg += 1.0) push(deg, 50.0);
    for (double deg = 10.0; deg >= -10.0; deg -= 1.0) push(deg, 70.0);
    const auto chains = sample_chain(edge, web);
    REQUIRE(chains.size() == 2);
    for (const Chain& c : chains) {
        // One node per ray within each split chain.
        std::vector<int> rays;
        for (const Node& n : c.nodes()) rays.push_back(n.ray_index);
        std::sort(rays.begin(), rays.end());
        CHECK(std::adjacent_find(rays.begin(), rays.end()) == rays.end());
    }
}

TEST_CASE("sample_chain: node count never exceeds nb_rays") {
    // Archimedean spiral making two full turns: 720 crossings on 360 rays.
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    EdgeChain edge;
    for (int i = 0; i <= 4000; ++i) {
        const double a = kTwoPi * 2.0 * i / 4000.0;
        const double r = 30.0 + 20.0 * a / kTwoPi;
        EdgePoint p;
        p.x = r * std::cos(a);
        p.y = r * std::sin(a);
        edge.points.push_back(p);
    }
    const auto chains = sample_chain(edge, web);
    REQUIRE_FALSE(chains.empty());
    int total = 0;
    for (const Chain& c : chains) {
        CHECK(c.size() <= 360);
        total += c.size();
    }
    CHECK(total >= 600);  // most of the 720 crossings survive the splits
}

TEST_CASE("chains_intersect matches ray-set overlap") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const Chain a = flat_arc(web, 0, 11, 10.0);   // rays 0..10
    const Chain b = flat_arc(web, 5, 11, 20.0);   // rays 5..15
    const Chain c = flat_arc(web, 11, 10, 30.0);  // rays 11..20
    CHECK(chains_intersect(a, b));
    CHECK_FALSE(chains_intersect(a, c));
    CHECK(chains_intersect(b, c));
    const Chain closed = flat_arc(web, 0, 360, 50.0);
    CHECK(closed.is_closed());
    CHECK(chains_intersect(closed, a));
    CHECK(chains_intersect(closed, c));
}

TEST_CASE("visible_neighbors: concentric arcs order by radius") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> chains;
    chains.push_back(flat_arc(web, 0, 21, 10.0, 0));
    chains.push_back(flat_arc(web, 0, 21, 20.0, 1));
    chains.push_back(flat_arc(web, 0, 21, 30.0, 2));

    const auto inward = visible_neighbors(chains[1], Endpoint::A, RadialDir::Inward, chains);
    REQUIRE(inward.has_value());
    CHECK(inward->chain_index == 0);
    CHECK(inward->node.radius == doctest::Approx(10.0));

    const auto outward = visible_neighbors(chains[1], Endpoint::A, RadialDir::Outward, chains);
    REQUIRE(outward.has_value());
    CHECK(outward->chain_index == 2);

    // Nothing beyond the outermost arc, nothing inside the innermost.
    CHECK_FALSE(visible_neighbors(chains[2], Endpoint::B, RadialDir::Outward, chains).has_value());
    CHECK_FALSE(visible_neighbors(chains[0], Endpoint::B, RadialDir::Inward, chains).has_value());
}

TEST_CASE("visible_neighbors skips chains hidden behind a nearer one") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> chains;
    chains.push_back(flat_arc(web, 0, 11, 10.0, 0));
    chains.push_back(flat_arc(web, 0, 11, 20.0, 1));
    chains.push_back(flat_arc(web, 0, 11, 30.0, 2));
    // From the innermost arc looking outward, the radius-20 arc hides 30.
    const auto seen = visible_neighbors(chains[0], Endpoint::A, RadialDir::Outward, chains);
    REQUIRE(seen.has_value());
    CHECK(seen->chain_index == 1);
}

TEST_CASE("visible_neighbors is antisymmetric on concentric arcs") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> chains;
    chains.push_back(flat_arc(web, 40, 15, 12.0, 0));
    chains.push_back(flat_arc(web, 40, 15, 25.0, 1));
    const auto out = visible_neighbors(chains[0], Endpoint::A, RadialDir::Outward, chains);
    const auto in = visible_neighbors(chains[1], Endpoint::A, RadialDir::Inward, chains);
    REQUIRE(out.has_value());
    REQUIRE(in.has_value());
    CHECK(out->chain_index == 1);
    CHECK(in->chain_index == 0);
}

TEST_CASE("interpolate_gap: constant radius fills rays 1..3") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const Chain src = flat_arc(web, 0, 1, 10.0);  // helper for node construction
    Node a = src.nodes()[0];
    Node b = a;
    b.ray_index = 4;
    const Point2 pb = web.point_at(4, 10.0);
    b.x = pb.x;
    b.y = pb.y;
    const auto nodes = interpolate_gap(a, b, web);
    REQUIRE(nodes.size() == 3);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        CHECK(nodes[k].ray_index == static_cast<int>(k) + 1);
        CHECK(nodes[k].radius == doctest::Approx(10.0));
        const Point2 expect = web.point_at(nodes[k].ray_index, nodes[k].radius);
        CHECK(std::abs(nodes[k].x - expect.x) <= 1e-9);
        CHECK(std::abs(nodes[k].y - expect.y) <= 1e-9);
    }
}

TEST_CASE("interpolate_gap: linear radius midpoint") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a;
    a.ray_index = 0;
    a.radius = 10.0;
    Node b;
    b.ray_index = 2;
    b.radius = 14.0;
    const auto nodes = interpolate_gap(a, b, web);
    REQUIRE(nodes.size() == 1);
    CHECK(nodes[0].ray_index == 1);
    CHECK(nodes[0].radius == doctest::Approx(12.0));
}

TEST_CASE("interpolate_gap: wraparound 358 -> 2") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a;
    a.ray_index = 358;
    a.radius = 10.0;
    Node b;
    b.ray_index = 2;
    b.radius = 10.0;
    const auto nodes = interpolate_gap(a, b, web);
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].ray_index == 359);
    CHECK(nodes[1].ray_index == 0);
    CHECK(nodes[2].ray_index == 1);
}

TEST_CASE("interpolate_gap: shorter path may run clockwise") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a;
    a.ray_index = 4;
    a.radius = 10.0;
    Node b;
    b.ray_index = 0;
    b.radius = 18.0;
    const auto nodes = interpolate_gap(a, b, web);
    REQUIRE(nodes.size() == 3);
    // Walks 4 -> 3 -> 2 -> 1 -> 0, radius linear along the walk.
    CHECK(nodes[0].ray_index == 3);
    CHECK(nodes[1].ray_index == 2);
    CHECK(nodes[2].ray_index == 1);
    CHECK(nodes[0].radius == doctest::Approx(12.0));
    CHECK(nodes[1].radius == doctest::Approx(14.0));
    CHECK(nodes[2].radius == doctest::Approx(16.0));
}

TEST_CASE("interpolate_gap: antipodal tie resolved counterclockwise") {
    const SpiderWeb web = build_spider_web({0, 0}, 8);
    Node a;
    a.ray_index = 0;
    a.radius = 10.0;
    Node b;
    b.ray_index = 4;
    b.radius = 10.0;
    const auto nodes = interpolate_gap(a, b, web);
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].ray_index == 1);  // ccw, not 7
    CHECK(nodes[1].ray_index == 2);
    CHECK(nodes[2].ray_index == 3);
}

TEST_CASE("interpolate_gap rejects equal rays") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a;
    a.ray_index = 7;
    a.radius = 10.0;
    CHECK_THROWS_AS(interpolate_gap(a, a, web), Error);
}

TEST_CASE("interpolate_arc always walks counterclockwise") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a;
    a.ray_index = 4;
    a.radius = 10.0;
    Node b;
    b.ray_index = 0;
    b.radius = 10.0;
    // Counterclockwise from 4 to 0 is the long way round: 355 nodes.
    const auto nodes = interpolate_arc(a, b, web);
    REQUIRE(nodes.size() == 355);
    CHECK(nodes.front().ray_index == 5);
    CHECK(nodes.back().ray_index == 359);
}

TEST_CASE("interpolate_gap property: length equals angular gap minus one") {
    const SpiderWeb web = build_spider_web({0, 0}, 60);
    std::mt19937 rng(4242);
    std::uniform_int_distribution<int> ray(0, 59);
    std::uniform_real_distribution<double> radius(5.0, 80.0);
    for (int trial = 0; trial < 200; ++trial) {
        Node a;
        a.ray_index = ray(rng);
        a.radius = radius(rng);
        Node b;
        b.ray_index = ray(rng);
        b.radius = radius(rng);
        if (a.ray_index == b.ray_index) continue;
        const auto nodes = interpolate_gap(a, b, web);
        const int fwd = static_cast<int>((b.ray_index - a.ray_index + 60) % 60);
        const int gap = std::min(fwd, 60 - fwd);
        CHECK(static_cast<int>(nodes.size()) == gap - 1);
        for (const Node& n : nodes) {
            CHECK(n.ray_index != a.ray_index);
            CHECK(n.ray_index != b.ray_index);
        }
    }
}

TEST_CASE("interpolation marks synthesized nodes and evidence() ignores them") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    Node a = flat_arc(web, 0, 1, 10.0).nodes()[0];
    Node b = a;
    b.ray_index = 8;
    const Point2 pb = web.point_at(8, 10.0);
    b.x = pb.x;
    b.y = pb.y;
    CHECK(!a.interpolated);  // measured crossings default to evidence
    for (const Node& n : interpolate_gap(a, b, web)) CHECK(n.interpolated);
    for (const Node& n : interpolate_arc(a, b, web)) CHECK(n.interpolated);

    std::vector<Node> nodes{a};
    for (Node n : interpolate_arc(a, b, web)) nodes.push_back(n);
    nodes.push_back(b);
    const Chain mixed(std::move(nodes), web.nb_rays);
    CHECK(mixed.size() == 9);
    CHECK(mixed.evidence() == 2);
}

TEST_CASE("polygon_radii: square and circle") {
    const SpiderWeb web = build_spider_web({0, 0}, 4);
    const std::vector<Point2> square{{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
    const auto radii = polygon_radii(square, web);
    REQUIRE(radii.size() == 4);
    for (double r : radii) CHECK(r == doctest::Approx(10.0));

    const SpiderWeb fine = build_spider_web({50, 50}, 360);
    std::vector<Point2> circle;
    for (int i = 0; i < 720; ++i) {
        const double a = kTwoPi * i / 720;
        circle.push_back({50 + 30 * std::cos(a), 50 + 30 * std::sin(a)});
    }
    for (double r : polygon_radii(circle, fine)) CHECK(r == doctest::Approx(30.0).epsilon(1e-4));
}

TEST_CASE("polygon_radii: star polygon against its generating radius") {
    // r(theta) = 40 + 8*cos(5*theta) sampled densely; the exact radius on
    // each ray is the generator evaluated at the ray angle.
    const SpiderWeb web = build_spider_web({0, 0}, 36);
    std::vector<Point2> star;
    for (int i = 0; i < 3600; ++i) {
        const double a = kTwoPi * i / 3600;
        const double r = 40.0 + 8.0 * std::cos(5.0 * a);
        star.push_back({r * std::cos(a), r * std::sin(a)});
    }
    const auto radii = polygon_radii(star, web);
    for (int i = 0; i < 36; ++i) {
        const double expect = 40.0 + 8.0 * std::cos(5.0 * web.angle(i));
        CHECK(radii[i] == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("polygon_radii rejects centers outside and degenerate polygons") {
    const SpiderWeb web = build_spider_web({100, 0}, 8);
    const std::vector<Point2> square{{-10, -10}, {10, -10}, {10, 10}, {-10, 10}};
    CHECK_THROWS_AS(polygon_radii(square, web), CenterOutsidePolygon);
    const SpiderWeb inside = build_spider_web({0, 0}, 8);
    CHECK_THROWS_AS(polygon_radii({{0, 0}, {1, 1}}, inside), DegenerateRing);
}
