#include <treering/errors.hpp>
#include <treering/ring_detect.hpp>

#include <builders.hpp>
#include <doctest.h>
#include <synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace treering;
using synth::flat_arc;
using synth::make_arc;

namespace {

double ring_rmse(const Ring& det, const Ring& gt) {
    REQUIRE(det.radii.size() == gt.radii.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < det.radii.size(); ++i) {
        const double d = det.radii[i] - gt.radii[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(det.radii.size()));
}

}  // namespace

TEST_CASE("connect_chains: a single closed chain is a fixed point") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const std::vector<Chain> in{flat_arc(web, 0, 360, 50.0)};
    const DetectParams params;
    const auto out = connect_chains(in, web, params);
    REQUIRE(out.size() == 1);
    CHECK(out[0].is_closed());
    for (const Node& n : out[0].nodes()) CHECK(n.radius == doctest::Approx(50.0));
}

TEST_CASE("connect_chains: four arcs of a circle merge around a closed support") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    // Circle of radius 50 split into four 88-ray arcs with 2-ray gaps.
    for (int q = 0; q < 4; ++q) in.push_back(flat_arc(web, q * 90, 88, 50.0));
    in.push_back(flat_arc(web, 0, 360, 70.0));  // closed support circle
    const DetectParams params;
    const auto out = connect_chains(in, web, params);

    REQUIRE(out.size() == 2);
    const Chain* merged = nullptr;
    const Chain* support = nullptr;
    for (const Chain& c : out) {
        if (c.mean_radius() < 60.0)
            merged = &c;
        else
            support = &c;
    }
    REQUIRE(merged != nullptr);
    REQUIRE(support != nullptr);
    CHECK(merged->is_closed());
    CHECK(merged->size() == 360);
    for (const Node& n : merged->nodes()) CHECK(n.radius == doctest::Approx(50.0).epsilon(1e-6));
    CHECK(support->size() == 360);
}

TEST_CASE("connect_chains: disjoint rings on complementary arcs stay apart") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    in.push_back(flat_arc(web, 0, 180, 30.0));    // inner half circle
    in.push_back(flat_arc(web, 180, 180, 60.0));  // outer half circle
    in.push_back(flat_arc(web, 0, 360, 90.0));    // closed support
    const DetectParams params;
    const auto out = connect_chains(in, web, params);
    // The radius jump (30 vs 60) fails RadialTol and SimilarRadialDist, so
    // nothing merges even with the relaxation passes.
    CHECK(out.size() == 3);
}

TEST_CASE("connect_chains: overlapping half circles at different radii never merge") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    in.push_back(flat_arc(web, 0, 180, 30.0));
    in.push_back(flat_arc(web, 0, 180, 60.0));  // same rays: any merge would fold
    const DetectParams params;
    const auto out = connect_chains(in, web, params);
    CHECK(out.size() == 2);
}

TEST_CASE("connect_chains: chain count never increases and per-ray uniqueness holds") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    for (int q = 0; q < 6; ++q) in.push_back(flat_arc(web, q * 60, 55, 40.0));
    in.push_back(flat_arc(web, 0, 360, 80.0));
    const DetectParams params;
    const auto out = connect_chains(in, web, params);
    CHECK(out.size() <= in.size());
    for (const Chain& c : out) {
        std::vector<int> rays;
        for (const Node& n : c.nodes()) rays.push_back(n.ray_index);
        std::sort(rays.begin(), rays.end());
        CHECK(std::adjacent_find(rays.begin(), rays.end()) == rays.end());
    }
    // All six arcs lie on the same circle: they collapse into one closed
    // chain plus the support.
    CHECK(out.size() == 2);
}

TEST_CASE("connect_chains: distant fragments never bridge across a long gap") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    // Same radius, so every similarity criterion would pass; only the
    // junction length (111 and 170 rays, against a 36-ray budget at the
    // default coverage) keeps them apart.
    in.push_back(flat_arc(web, 0, 40, 50.0));
    in.push_back(flat_arc(web, 150, 40, 50.0));
    in.push_back(flat_arc(web, 0, 360, 70.0));  // closed support
    const DetectParams params;
    const auto out = connect_chains(in, web, params);
    CHECK(out.size() == 3);
}

TEST_CASE("connect_chains: self-closure demands measured coverage") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const auto arc_with_filler = [&](int real_nodes, int filler_nodes) {
        std::vector<Node> nodes;
        for (int k = 0; k < real_nodes + filler_nodes; ++k) {
            Node n;
            n.ray_index = k;
            n.radius = 50.0;
            const Point2 p = web.point_at(k, n.radius);
            n.x = p.x;
            n.y = p.y;
            n.gradient = web.direction(k);
            n.interpolated = k >= real_nodes;
            nodes.push_back(n);
        }
        return Chain(std::move(nodes), web.nb_rays, -1);
    };
    const DetectParams params;  // min_ring_coverage 0.9 -> 324 measured nodes

    std::vector<Chain> starved{arc_with_filler(140, 200), flat_arc(web, 0, 360, 70.0)};
    const auto no_close = connect_chains(starved, web, params);
    for (const Chain& c : no_close) {
        if (c.mean_radius() < 60.0) CHECK(!c.is_closed());
    }

    std::vector<Chain> fed{arc_with_filler(340, 0), flat_arc(web, 0, 360, 70.0)};
    const auto closed = connect_chains(fed, web, params);
    bool found_closed = false;
    for (const Chain& c : closed) {
        if (c.mean_radius() < 60.0 && c.is_closed()) found_closed = true;
    }
    CHECK(found_closed);
}

TEST_CASE("close_rings: full-coverage chain becomes a ring unchanged") {
    const SpiderWeb web = build_spider_web({10, 10}, 360);
    const std::vector<Chain> in{flat_arc(web, 0, 360, 42.0, 0)};
    const DetectParams params;
    const auto rings = close_rings(in, web, params);
    REQUIRE(rings.size() == 1);
    REQUIRE(rings[0].radii.size() == 360);
    for (int i = 0; i < 360; ++i) {
        CHECK(rings[0].radii[i] == doctest::Approx(42.0));
        const Point2 expect = web.point_at(i, 42.0);
        CHECK(std::abs(rings[0].polygon[i].x - expect.x) <= 1e-9);
        CHECK(std::abs(rings[0].polygon[i].y - expect.y) <= 1e-9);
    }
}

TEST_CASE("close_rings: 350 of 360 rays closes with interpolated radii") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const std::vector<Chain> in{flat_arc(web, 5, 350, 40.0, 0)};
    const DetectParams params;  // min_ring_coverage 0.9
    const auto rings = close_rings(in, web, params);
    REQUIRE(rings.size() == 1);
    for (double r : rings[0].radii) CHECK(r == doctest::Approx(40.0).epsilon(1e-9));
}

TEST_CASE("close_rings: 100 of 360 rays is discarded") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const std::vector<Chain> in{flat_arc(web, 0, 100, 40.0, 0)};
    const DetectParams params;
    CHECK(close_rings(in, web, params).empty());
}

TEST_CASE("close_rings: interpolated filler does not count toward coverage") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    const auto chain_with_filler = [&](int total, int real) {
        std::vector<Node> nodes;
        for (int k = 0; k < total; ++k) {
            Node n;
            n.ray_index = k;
            n.radius = 45.0;
            const Point2 p = web.point_at(k, n.radius);
            n.x = p.x;
            n.y = p.y;
            n.gradient = web.direction(k);
            n.interpolated = k >= real;
            nodes.push_back(n);
        }
        return Chain(std::move(nodes), web.nb_rays, 0);
    };
    const DetectParams params;  // min_ring_coverage 0.9

    // A fully closed chain that is mostly invented must not become a ring.
    CHECK(close_rings({chain_with_filler(360, 100)}, web, params).empty());
    // A few interpolated nodes among plenty of measured ones are fine.
    CHECK(close_rings({chain_with_filler(350, 340)}, web, params).size() == 1);
}

TEST_CASE("close_rings deduplicates near-identical candidates keeping the longer") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    in.push_back(flat_arc(web, 0, 360, 50.0, 0));
    in.push_back(flat_arc(web, 3, 352, 50.4, 1));  // within 1 px of the first
    const DetectParams params;
    const auto rings = close_rings(in, web, params);
    REQUIRE(rings.size() == 1);
    CHECK(rings[0].radii[0] == doctest::Approx(50.0));
}

TEST_CASE("close_rings rejects a candidate crossing an accepted ring") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    in.push_back(flat_arc(web, 0, 360, 50.0, 0));
    // Second candidate oscillates through the first ring.
    in.push_back(make_arc(
        web, 0, 360, [](int k) { return 50.0 + 8.0 * std::sin(kTwoPi * k / 360.0); }, 1));
    const DetectParams params;
    const auto rings = close_rings(in, web, params);
    REQUIRE(rings.size() == 1);
    CHECK(rings[0].radii[90] == doctest::Approx(50.0));
}

TEST_CASE("close_rings sorts output by mean radius") {
    const SpiderWeb web = build_spider_web({0, 0}, 360);
    std::vector<Chain> in;
    in.push_back(flat_arc(web, 0, 360, 80.0, 0));
    in.push_back(flat_arc(web, 0, 360, 20.0, 1));
    in.push_back(flat_arc(web, 0, 360, 50.0, 2));
    const DetectParams params;
    const auto rings = close_rings(in, web, params);
    REQUIRE(rings.size() == 3);
    CHECK(rings[0].mean_radius() == doctest::Approx(20.0));
    CHECK(rings[1].mean_radius() == doctest::Approx(50.0));
    CHECK(rings[2].mean_radius() == doctest::Approx(80.0));
}

TEST_CASE("detect: ten concentric circles within 2 px RMSE each") {
    synth::SyntheticSpec spec;
    spec.radii = synth::even_radii(10, 40.0, 320.0);
    const ColorImage image = synth::render_target(spec);

    DetectParams params;
    params.working_size = 700;  // image is already at working size
    const auto rings = detect(image, spec.center, params);

    const SpiderWeb web = build_spider_web(spec.center, params.nb_rays);
    const auto gt = synth::ground_truth(spec, web);
    REQUIRE(rings.size() == gt.size());
    for (std::size_t k = 0; k < rings.size(); ++k) {
        CHECK(ring_rmse(rings[k], gt[k]) <= 2.0);
    }
}

TEST_CASE("detect: blank image yields no rings") {
    const ColorImage blank = ColorImage::filled(700, 700, 230, 220, 210);
    DetectParams params;
    params.working_size = 700;
    CHECK(detect(blank, {350.0, 350.0}, params).empty());
}

TEST_CASE("detect: ellipse rings survive the gradient filter") {
    synth::SyntheticSpec spec;
    spec.radii = synth::even_radii(6, 50.0, 260.0);
    spec.axis_a = 1.2;
    spec.axis_b = 0.95;
    spec.rotation = deg_to_rad(25.0);
    const ColorImage image = synth::render_target(spec);

    DetectParams params;
    params.working_size = 700;
    const auto rings = detect(image, spec.center, params);

    const SpiderWeb web = build_spider_web(spec.center, params.nb_rays);
    const auto gt = synth::ground_truth(spec, web);
    REQUIRE(rings.size() == gt.size());
    for (std::size_t k = 0; k < rings.size(); ++k) CHECK(ring_rmse(rings[k], gt[k]) <= 2.0);
}

TEST_CASE("detect: rotating the target cyclically shifts the radii") {
    synth::SyntheticSpec spec;
    spec.radii = synth::even_radii(5, 60.0, 260.0);
    spec.axis_a = 1.15;
    spec.axis_b = 1.0;

    DetectParams params;
    params.working_size = 700;
    const auto base = detect(synth::render_target(spec), spec.center, params);

    // Rotate by exactly 10 ray spacings.
    const int shift = 10;
    synth::SyntheticSpec rotated = spec;
    rotated.rotation = shift * kTwoPi / params.nb_rays;
    const auto turned = detect(synth::render_target(rotated), rotated.center, params);

    REQUIRE(base.size() == spec.radii.size());
    REQUIRE(turned.size() == base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        for (int i = 0; i < params.nb_rays; ++i) {
            const int j = (i + shift) % params.nb_rays;
            CHECK(std::abs(turned[k].radii[j] - base[k].radii[i]) <= 1.0);
        }
    }
}

TEST_CASE("detect: emitted rings never cross") {
    synth::SyntheticSpec spec;
    spec.radii = synth::even_radii(8, 45.0, 300.0);
    spec.axis_a = 1.1;
    spec.axis_b = 0.9;
    spec.blur_sigma = 1.0;
    const ColorImage image = synth::render_target(spec);
    DetectParams params;
    params.working_size = 700;
    const auto rings = detect(image, spec.center, params);
    REQUIRE(rings.size() >= 2);
    for (std::size_t k = 1; k < rings.size(); ++k)
        for (int i = 0; i < params.nb_rays; ++i)
            CHECK(rings[k].radii[i] > rings[k - 1].radii[i]);
}

TEST_CASE("detect handles resized input frames") {
    // A 900-pixel target processed at working size 600: rings must come
    // back in the original 900-pixel coordinates.
    synth::SyntheticSpec spec;
    spec.width = 900;
    spec.height = 900;
    spec.center = {450.0, 450.0};
    spec.radii = synth::even_radii(5, 60.0, 380.0);
    const ColorImage image = synth::render_target(spec);

    DetectParams params;
    params.working_size = 600;
    const auto rings = detect(image, spec.center, params);

    const SpiderWeb web = build_spider_web(spec.center, params.nb_rays);
    const auto gt = synth::ground_truth(spec, web);
    REQUIRE(rings.size() == gt.size());
    // Resampling through the working frame costs accuracy; require 3 px
    // at the original scale (2 px in the 600-px working frame).
    for (std::size_t k = 0; k < rings.size(); ++k) CHECK(ring_rmse(rings[k], gt[k]) <= 3.0);
}
