#include <treering/edge_detect.hpp>
#include <treering/errors.hpp>
#include <treering/raster.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace treering;

namespace {

// Disk of radius r, dark inside and light outside, with a one-pixel linear
// blend across the boundary so the true edge sits exactly at distance r.
GrayImage disk_image(int size, double cx, double cy, double r) {
    GrayImage img = GrayImage::filled(size, size, 0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            const double f = std::clamp(d - r + 0.5, 0.0, 1.0);
            img.at(x, y) = static_cast<std::uint8_t>(std::lround(80.0 + 120.0 * f));
        }
    return img;
}

GrayImage vertical_step(int width, int height, int last_dark_col) {
    GrayImage img = GrayImage::filled(width, height, 50);
    for (int y = 0; y < height; ++y)
        for (int x = last_dark_col + 1; x < width; ++x) img.at(x, y) = 200;
    return img;
}

double angle_between(Point2 a, Point2 b) {
    const double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

TEST_CASE("gaussian_gradient: constant image has zero gradient") {
    const GradientField g = gaussian_gradient(GrayImage::filled(64, 64, 123), 2.0);
    for (double v : g.mag) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("gaussian_gradient: unit normalization on a linear ramp") {
    // Intensity 2*x: the x-gradient must be exactly 2 away from the borders.
    GrayImage img = GrayImage::filled(100, 40, 0);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 100; ++x) img.at(x, y) = static_cast<std::uint8_t>(2 * x);
    const GradientField g = gaussian_gradient(img, 2.0);
    for (int y = 10; y < 30; ++y)
        for (int x = 20; x < 80; ++x) {
            CHECK(g.gx[g.index(x, y)] == doctest::Approx(2.0).epsilon(1e-6));
            CHECK(g.gy[g.index(x, y)] == doctest::Approx(0.0).epsilon(1e-6));
        }
}

TEST_CASE("gaussian_gradient: diagonal ramp splits evenly") {
    GrayImage img = GrayImage::filled(80, 80, 0);
    for (int y = 0; y < 80; ++y)
        for (int x = 0; x < 80; ++x) img.at(x, y) = static_cast<std::uint8_t>(x + y);
    const GradientField g = gaussian_gradient(img, 1.5);
    CHECK(g.gx[g.index(40, 40)] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.gy[g.index(40, 40)] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(g.mag[g.index(40, 40)] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("gaussian_gradient rejects bad inputs") {
    CHECK_THROWS_AS(gaussian_gradient(GrayImage::filled(64, 64, 0), 0.0), Error);
    CHECK_THROWS_AS(gaussian_gradient(GrayImage::filled(64, 64, 0), -1.0), Error);
    // sigma = 3 needs a 25-tap kernel; a 10 px image cannot support it.
    CHECK_THROWS_AS(gaussian_gradient(GrayImage::filled(10, 10, 0), 3.0), ImageTooSmall);
}

TEST_CASE("magnitude_percentile uses nearest-rank over positive magnitudes") {
    GradientField g;
    g.width = 10;
    g.height = 11;
    g.gx.assign(110, 0.0);
    g.gy.assign(110, 0.0);
    g.mag.assign(110, 0.0);
    // Ten zeros (ignored) and the values 1..100.
    for (int i = 0; i < 100; ++i) g.mag[i + 10] = i + 1.0;
    CHECK(magnitude_percentile(g, 50.0) == doctest::Approx(50.0));
    CHECK(magnitude_percentile(g, 70.0) == doctest::Approx(70.0));
    CHECK(magnitude_percentile(g, 85.0) == doctest::Approx(85.0));
    CHECK(magnitude_percentile(g, 100.0) == doctest::Approx(100.0));

    GradientField zero;
    zero.width = 2;
    zero.height = 2;
    zero.gx.assign(4, 0.0);
    zero.gy.assign(4, 0.0);
    zero.mag.assign(4, 0.0);
    CHECK(magnitude_percentile(zero, 85.0) == doctest::Approx(0.0));
}

TEST_CASE("detect_edges: constant image gives no chains") {
    CHECK(detect_edges(GrayImage::filled(128, 128, 90), 3.0, 1.0, 2.0).empty());
}

TEST_CASE("detect_edges: vertical step localizes at x = 100.5") {
    const GrayImage img = vertical_step(200, 64, 100);
    const auto chains = detect_edges(img, 3.0, 2.0, 8.0);
    REQUIRE(chains.size() == 1);
    const EdgeChain& chain = chains[0];
    CHECK(chain.points.size() >= 40);  // spans the rows away from the border
    for (const EdgePoint& p : chain.points) {
        CHECK(std::abs(p.x - 100.5) <= 0.1);
        CHECK(p.gradient.x > 0.0);
        // By symmetry the gradient is purely horizontal.
        CHECK(std::abs(p.gradient.y) <= 0.268 * p.gradient.x);  // within 15 degrees
    }
}

TEST_CASE("detect_edges: horizontal step localizes at y = 80.5") {
    GrayImage img = GrayImage::filled(64, 160, 50);
    for (int y = 81; y < 160; ++y)
        for (int x = 0; x < 64; ++x) img.at(x, y) = 200;
    const auto chains = detect_edges(img, 3.0, 2.0, 8.0);
    REQUIRE(chains.size() == 1);
    for (const EdgePoint& p : chains[0].points) {
        CHECK(std::abs(p.y - 80.5) <= 0.1);
        CHECK(p.gradient.y > 0.0);
    }
}

TEST_CASE("detect_edges: disk boundary within half a pixel, gradients outward") {
    const double cx = 128.0, cy = 128.0, r = 100.0;
    const GrayImage img = disk_image(256, cx, cy, r);
    const auto chains = detect_edges(img, 3.0, 2.0, 8.0);
    REQUIRE(chains.size() == 1);
    const EdgeChain& chain = chains[0];
    CHECK(chain.is_closed());
    CHECK(chain.points.size() >= 400);  // circumference is ~628 px
    for (const EdgePoint& p : chain.points) {
        const Point2 radial{p.x - cx, p.y - cy};
        CHECK(std::abs(norm(radial) - r) <= 0.5);
        CHECK(dot(p.gradient, radial) > 0.0);
        CHECK(angle_between(p.gradient, radial) <= deg_to_rad(15.0));
    }
}

TEST_CASE("detect_edges: chain links stay within 2 px and chains have >= 2 points") {
    const auto chains = detect_edges(disk_image(256, 120.0, 130.0, 80.0), 3.0, 2.0, 8.0);
    REQUIRE_FALSE(chains.empty());
    for (const EdgeChain& chain : chains) {
        REQUIRE(chain.points.size() >= 2);
        for (std::size_t i = 1; i < chain.points.size(); ++i) {
            const double dx = chain.points[i].x - chain.points[i - 1].x;
            const double dy = chain.points[i].y - chain.points[i - 1].y;
            CHECK(std::hypot(dx, dy) <= 2.0 + 1e-9);
        }
        for (const EdgePoint& p : chain.points) CHECK(norm(p.gradient) > 0.0);
    }
}

TEST_CASE("detect_edges is deterministic") {
    const GrayImage img = disk_image(200, 100.0, 100.0, 70.0);
    const auto a = detect_edges(img, 3.0, 2.0, 8.0);
    const auto b = detect_edges(img, 3.0, 2.0, 8.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c) {
        REQUIRE(a[c].points.size() == b[c].points.size());
        for (std::size_t i = 0; i < a[c].points.size(); ++i) {
            CHECK(a[c].points[i].x == b[c].points[i].x);
            CHECK(a[c].points[i].y == b[c].points[i].y);
        }
    }
}

TEST_CASE("detect_edges validates thresholds and size") {
    const GrayImage img = GrayImage::filled(64, 64, 0);
    CHECK_THROWS_AS(detect_edges(img, 3.0, -1.0, 2.0), Error);
    CHECK_THROWS_AS(detect_edges(img, 3.0, 5.0, 2.0), Error);
    CHECK_THROWS_AS(detect_edges(GrayImage::filled(4, 4, 0), 1.0, 1.0, 2.0), ImageTooSmall);
}
