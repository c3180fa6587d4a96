#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "polyseg/contour.hpp"
#include "support/fixtures.hpp"

using namespace polyseg;

namespace {

bool contains_point(const std::vector<Point2>& pts, double x, double y) {
    for (const auto& p : pts)
        if (std::abs(p.x - x) < 1e-9 && std::abs(p.y - y) < 1e-9) return true;
    return false;
}

// Every vertex must be one of the chain points.
bool subset_of_chain(const Polygon& poly, const ContourChain& chain) {
    for (const auto& v : poly.vertices)
        if (!contains_point(chain.points, v.x, v.y)) return false;
    return true;
}

}  // namespace

TEST_CASE("extract_contours on a 4x4 square finds the 12 boundary pixels") {
    auto mask = fixtures::blank_mask(10, 10);
    fixtures::fill_rect(mask, 3, 3, 6, 6, 1);
    const auto result = extract_contours(mask);
    REQUIRE(result.chains.size() == 1);
    const auto& chain = result.chains.at(1);
    REQUIRE(chain.size() == 12);

    // Hand-enumerated boundary pixel set of the square.
    std::set<std::pair<int, int>> expected;
    for (int x = 3; x <= 6; ++x) {
        expected.insert({x, 3});
        expected.insert({x, 6});
    }
    for (int y = 4; y <= 5; ++y) {
        expected.insert({3, y});
        expected.insert({6, y});
    }
    std::set<std::pair<int, int>> got;
    for (const auto& p : chain.points)
        got.insert({static_cast<int>(p.x - 0.5), static_cast<int>(p.y - 0.5)});
    CHECK(got == expected);

    // 8-connected and closed.
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const auto& a = chain.points[i];
        const auto& b = chain.points[(i + 1) % chain.size()];
        CHECK(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) <= 1.0 + 1e-9);
    }
}

TEST_CASE("extract_contours edge cases") {
    const auto empty = extract_contours(fixtures::blank_mask(8, 8));
    CHECK(empty.chains.empty());

    auto two = fixtures::blank_mask(20, 10);
    fixtures::fill_rect(two, 1, 1, 4, 4, 1);
    fixtures::fill_rect(two, 10, 2, 15, 7, 2);
    const auto both = extract_contours(two);
    CHECK(both.chains.size() == 2);
    CHECK(both.chains.count(1) == 1);
    CHECK(both.chains.count(2) == 1);

    auto tiny = fixtures::blank_mask(5, 5);
    tiny.pixels[2 * 5 + 2] = 7;  // single pixel instance
    const auto skipped = extract_contours(tiny);
    CHECK(skipped.chains.empty());
    REQUIRE(skipped.skipped.size() == 1);
    CHECK(skipped.skipped[0] == 7);
}

TEST_CASE("extract_contours clips at the image border") {
    auto mask = fixtures::blank_mask(8, 8);
    fixtures::fill_rect(mask, 0, 0, 3, 3, 1);  // touches two borders
    const auto result = extract_contours(mask);
    REQUIRE(result.chains.count(1) == 1);
    for (const auto& p : result.chains.at(1).points) {
        CHECK(p.x >= 0.0);
        CHECK(p.y >= 0.0);
    }
}

TEST_CASE("dominant_points of a rectangle are exactly its corners") {
    auto mask = fixtures::blank_mask(32, 26);
    fixtures::fill_rect(mask, 5, 5, 24, 16, 1);
    const auto chains = extract_contours(mask);
    const auto dom = dominant_points(chains.chains.at(1));
    REQUIRE(dom.size() == 4);
    CHECK(contains_point(dom, 5.5, 5.5));
    CHECK(contains_point(dom, 24.5, 5.5));
    CHECK(contains_point(dom, 24.5, 16.5));
    CHECK(contains_point(dom, 5.5, 16.5));
}

TEST_CASE("dominant_points of a digitized circle are spread in angle") {
    auto mask = fixtures::blank_mask(64, 64);
    fixtures::fill_disk(mask, 32, 32, 20, 1);
    const auto chains = extract_contours(mask);
    const auto dom = dominant_points(chains.chains.at(1));
    REQUIRE(dom.size() >= 8);

    std::vector<double> angles;
    for (const auto& p : dom) angles.push_back(angle_deg(p.x - 32.0, p.y - 32.0));
    std::sort(angles.begin(), angles.end());
    double max_gap = angles.front() + 360.0 - angles.back();
    for (std::size_t i = 1; i < angles.size(); ++i)
        max_gap = std::max(max_gap, angles[i] - angles[i - 1]);
    CHECK(max_gap <= 60.0);
}

TEST_CASE("dominant_points of a collinear chain keeps the endpoints") {
    auto mask = fixtures::blank_mask(12, 12);
    fixtures::fill_rect(mask, 2, 5, 9, 5, 1);  // 1-pixel-tall line
    const auto chains = extract_contours(mask);
    const auto dom = dominant_points(chains.chains.at(1));
    REQUIRE(dom.size() == 2);
    CHECK(contains_point(dom, 2.5, 5.5));
    CHECK(contains_point(dom, 9.5, 5.5));
}

TEST_CASE("fixed_step_sample index arithmetic") {
    std::vector<Point2> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({static_cast<double>(i), 0.0});
    const auto poly = fixed_step_sample(pts, 20);
    REQUIRE(poly.size() == 20);
    for (std::size_t k = 0; k < 20; ++k) CHECK(poly.vertices[k].x == doctest::Approx(5.0 * k));

    pts.resize(10);
    const auto four = fixed_step_sample(pts, 4);
    REQUIRE(four.size() == 4);
    CHECK(four.vertices[0].x == doctest::Approx(0));
    CHECK(four.vertices[1].x == doctest::Approx(2));
    CHECK(four.vertices[2].x == doctest::Approx(5));
    CHECK(four.vertices[3].x == doctest::Approx(7));

    const auto same = fixed_step_sample(pts, 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(same.vertices[i].x == doctest::Approx(pts[i].x));

    CHECK_THROWS_AS(fixed_step_sample(std::vector<Point2>(5), 6), Error);
}

TEST_CASE("rdp_simplify reference cases") {
    const std::vector<Point2> collinear{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
    const auto ends = rdp_simplify(collinear, 0.1);
    REQUIRE(ends.size() == 2);
    CHECK(contains_point(ends, 0, 0));
    CHECK(contains_point(ends, 3, 0));

    const std::vector<Point2> tri{{0, 0}, {1, 1}, {2, 0}};
    CHECK(rdp_simplify(tri, 0.5).size() == 3);
    CHECK(rdp_simplify(tri, 1.5).size() == 2);
}

TEST_CASE("rdp_simplify vertex count is non-increasing in epsilon") {
    fixtures::Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto poly = fixtures::star_polygon(rng, 40, {0, 0}, 8.0, 14.0);
        std::size_t prev = poly.size() + 1;
        for (double eps = 0.01; eps < 20.0; eps *= 1.7) {
            const auto kept = rdp_simplify(poly.vertices, eps);
            CHECK(kept.size() <= prev);
            prev = kept.size();
        }
    }
}

TEST_CASE("adaptive_simplify recovers rectangle corners at n = 4") {
    auto mask = fixtures::blank_mask(40, 30);
    fixtures::fill_rect(mask, 6, 7, 29, 21, 1);
    const auto chains = extract_contours(mask);
    const auto poly = adaptive_simplify(chains.chains.at(1), 4);
    REQUIRE(poly.size() == 4);
    CHECK(contains_point(poly.vertices, 6.5, 7.5));
    CHECK(contains_point(poly.vertices, 29.5, 7.5));
    CHECK(contains_point(poly.vertices, 29.5, 21.5));
    CHECK(contains_point(poly.vertices, 6.5, 21.5));
}

TEST_CASE("adaptive_simplify returns the chain when sizes match") {
    ContourChain chain;
    chain.points = {{0.5, 0.5}, {1.5, 0.5}, {2.5, 1.5}, {1.5, 2.5}, {0.5, 1.5}};
    chain.arc_length = 6.0;
    const auto poly = adaptive_simplify(chain, 5);
    CHECK(poly.vertices == chain.points);
    CHECK_THROWS_AS(adaptive_simplify(chain, 6), Error);
}

TEST_CASE("adaptive_simplify hits the exact count and stays on the chain") {
    const auto shapes = fixtures::mixed_shape_set();
    for (std::size_t s = 0; s < shapes.size(); s += 4) {
        const auto chains = extract_contours(shapes[s]);
        REQUIRE(chains.chains.count(1) == 1);
        const auto& chain = chains.chains.at(1);
        for (std::size_t n : {4, 7, 12, 19}) {
            if (chain.size() < n) continue;
            const auto poly = adaptive_simplify(chain, n);
            CHECK(poly.size() == n);
            CHECK(subset_of_chain(poly, chain));
            CHECK_FALSE(is_self_intersecting(poly));
        }
    }
}

TEST_CASE("adaptive_simplify hits the exact count on random blobs") {
    fixtures::Rng rng(47);
    for (int trial = 0; trial < 8; ++trial) {
        auto mask = fixtures::blank_mask(96, 96);
        fixtures::fill_blob(mask, 48, 48, rng.uniform(20, 34), rng, 1);
        const auto chains = extract_contours(mask);
        REQUIRE(chains.chains.count(1) == 1);
        const auto& chain = chains.chains.at(1);
        for (std::size_t n = 4; n <= 24; n += 5) {
            if (chain.size() < n) continue;
            CHECK(adaptive_simplify(chain, n).size() == n);
        }
    }
}

TEST_CASE("adaptive beats fixed-step sampling on the car silhouette") {
    auto mask = fixtures::blank_mask(96, 96);
    fixtures::fill_car(mask, 6, 72, 80, 12, 22, 1);
    const auto chains = extract_contours(mask);
    const auto& chain = chains.chains.at(1);

    const auto adaptive = adaptive_simplify(chain, 12);
    const auto dom = dominant_points(chain);
    REQUIRE(dom.size() >= 12);
    const auto fixed = fixed_step_sample(dom, 12);

    const double iou_adaptive = polygon_mask_iou(adaptive, mask, 1);
    const double iou_fixed = polygon_mask_iou(fixed, mask, 1);
    CHECK(iou_adaptive >= iou_fixed);
    CHECK(iou_adaptive > 0.9);
}

TEST_CASE("polygon_mask_iou treats boundary samples as inside") {
    auto mask = fixtures::blank_mask(12, 12);
    fixtures::fill_rect(mask, 3, 3, 6, 6, 1);
    const Polygon corners({{3.5, 3.5}, {6.5, 3.5}, {6.5, 6.5}, {3.5, 6.5}});
    CHECK(polygon_mask_iou(corners, mask, 1) == doctest::Approx(1.0));
}

TEST_CASE("optimal_vertex_count stopping rule") {
    // Rectangle: IoU(4) is already ~1, so the first comparison at n = 6 fires.
    auto rect = fixtures::blank_mask(40, 30);
    fixtures::fill_rect(rect, 6, 7, 29, 21, 1);
    const auto rect_chain = extract_contours(rect).chains.at(1);
    CHECK(polygon_mask_iou(adaptive_simplify(rect_chain, 4), rect, 1) > 0.99);
    CHECK(optimal_vertex_count(rect_chain, rect, 1, 0.005) == 6);

    // delta = 1.0 can never be beaten, so the rule fires at the first test.
    auto disk = fixtures::blank_mask(80, 80);
    fixtures::fill_disk(disk, 40, 40, 30, 1);
    const auto disk_chain = extract_contours(disk).chains.at(1);
    CHECK(optimal_vertex_count(disk_chain, disk, 1, 1.0) == 6);

    // Tiny instance: n would exceed the chain, return the capped chain size.
    auto tiny = fixtures::blank_mask(8, 8);
    fixtures::fill_rect(tiny, 2, 2, 3, 3, 1);  // 2x2 square, 4 boundary pixels
    const auto tiny_chain = extract_contours(tiny).chains.at(1);
    CHECK(optimal_vertex_count(tiny_chain, tiny, 1, 0.005) == 4);
}

TEST_CASE("optimal_vertex_count satisfies its stopping predicate on a disk") {
    auto disk = fixtures::blank_mask(80, 80);
    fixtures::fill_disk(disk, 40, 40, 30, 1);
    const auto chain = extract_contours(disk).chains.at(1);
    const int n = optimal_vertex_count(chain, disk, 1, 0.005);
    CHECK(n == 18);  // frozen from an IoU sweep over the n ladder
    CHECK(n == optimal_vertex_count(chain, disk, 1, 0.005));  // deterministic

    const double at_n = polygon_mask_iou(adaptive_simplify(chain, n), disk, 1);
    const double at_prev = polygon_mask_iou(adaptive_simplify(chain, n - 2), disk, 1);
    CHECK(at_n - at_prev < 0.005);
    // every earlier step was a significant improvement
    double prev = polygon_mask_iou(adaptive_simplify(chain, 4), disk, 1);
    for (int k = 6; k < n; k += 2) {
        const double cur = polygon_mask_iou(adaptive_simplify(chain, k), disk, 1);
        CHECK(cur - prev >= 0.005);
        prev = cur;
    }
}
