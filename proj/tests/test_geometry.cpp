#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "west/errors.hpp"
#include "west/geometry.hpp"
#include "west/util.hpp"

using namespace west;

namespace {

Segment seg(double x1, double y1, double x2, double y2) {
    return Segment{Point{x1, y1}, Point{x2, y2}};
}

// independent oracle: carrier-line parameter intervals intersected in 1-D
double overlap_oracle(const Point& origin, const Point& dir, double a0, double a1, double b0,
                      double b1) {
    (void)origin;
    const double norm = std::hypot(dir.x, dir.y);
    const double lo = std::max(std::min(a0, a1), std::min(b0, b1));
    const double hi = std::min(std::max(a0, a1), std::max(b0, b1));
    return hi > lo ? (hi - lo) * norm : 0.0;
}

} // namespace

TEST_CASE("kmeans: two separated point masses") {
    std::vector<Point> pts;
    for (int i = 0; i < 4; ++i) pts.push_back(Point{0, 0});
    for (int i = 0; i < 4; ++i) pts.push_back(Point{10, 0});
    auto centers = kmeans_centers(pts, 2, 1);
    REQUIRE(centers.size() == 2);
    std::sort(centers.begin(), centers.end(), [](const Point& a, const Point& b) { return a.x < b.x; });
    CHECK(centers[0].x == doctest::Approx(0.0));
    CHECK(centers[0].y == doctest::Approx(0.0));
    CHECK(centers[1].x == doctest::Approx(10.0));
    CHECK(centers[1].y == doctest::Approx(0.0));
}

TEST_CASE("kmeans: identity case") {
    auto centers = kmeans_centers({Point{1, 1}}, 1, 99);
    REQUIRE(centers.size() == 1);
    CHECK(centers[0].x == doctest::Approx(1.0));
    CHECK(centers[0].y == doctest::Approx(1.0));
}

TEST_CASE("kmeans: recovers six well-separated gaussians") {
    const std::vector<Point> truth = {{0, 0}, {10, 0}, {20, 0}, {0, 10}, {10, 10}, {20, 10}};
    Rng rng(4242);
    std::vector<Point> pts;
    for (const auto& c : truth) {
        for (int i = 0; i < 100; ++i) {
            pts.push_back(Point{c.x + 0.1 * testsupport::gauss(rng), c.y + 0.1 * testsupport::gauss(rng)});
        }
    }
    auto centers = kmeans_centers(pts, 6, 7);
    REQUIRE(centers.size() == 6);
    // brute-force oracle: every true center has exactly one centroid within 0.2
    for (const auto& t : truth) {
        int close = 0;
        for (const auto& c : centers) {
            if (dist(t, c) < 0.2) ++close;
        }
        CHECK(close == 1);
    }
}

TEST_CASE("kmeans: deterministic per seed and error cases") {
    Rng rng(5);
    std::vector<Point> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(Point{rng.uniform(0, 10), rng.uniform(0, 10)});
    auto a = kmeans_centers(pts, 4, 11);
    auto b = kmeans_centers(pts, 4, 11);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x == b[i].x);
        CHECK(a[i].y == b[i].y);
    }
    CHECK_THROWS_AS(kmeans_centers({}, 1, 0), EmptyInput);
    CHECK_THROWS_AS(kmeans_centers({Point{1, 1}, Point{1, 1}}, 2, 0), DegenerateInput);
}

TEST_CASE("voronoi: horizontal pair splits at the bisector") {
    auto regions = voronoi_partition({Point{1, 1}, Point{3, 1}}, BBox{0, 0, 4, 2});
    REQUIRE(regions.size() == 2);
    CHECK(region_perimeter(regions[0]) == doctest::Approx(8.0));
    CHECK(region_perimeter(regions[1]) == doctest::Approx(8.0));
    // cell 0 is [0,2]x[0,2]
    for (const auto& v : regions[0].vertices()) {
        CHECK(v.x <= 2.0 + 1e-12);
    }
    CHECK(region_contains(regions[0], Point{1.9, 1.0}, 0.0));
    CHECK_FALSE(region_contains(regions[0], Point{2.1, 1.0}, 0.0));
}

TEST_CASE("voronoi: four-center symmetry") {
    auto regions =
        voronoi_partition({Point{1, 1}, Point{3, 1}, Point{1, 3}, Point{3, 3}}, BBox{0, 0, 4, 4});
    REQUIRE(regions.size() == 4);
    for (const auto& r : regions) {
        CHECK(region_perimeter(r) == doctest::Approx(8.0)); // each a 2x2 square
    }
}

TEST_CASE("voronoi: monte-carlo nearest-center oracle") {
    Rng gen(3);
    std::vector<Point> centers;
    for (int i = 0; i < 6; ++i) centers.push_back(Point{gen.uniform(0, 10), gen.uniform(0, 10)});
    const BBox bbox{0, 0, 10, 10};
    auto regions = voronoi_partition(centers, bbox);

    Rng sampler(99);
    int checked = 0;
    for (int s = 0; s < 10000; ++s) {
        const Point p{sampler.uniform(0, 10), sampler.uniform(0, 10)};
        double d1 = 1e300, d2 = 1e300;
        int nearest = -1;
        for (std::size_t c = 0; c < centers.size(); ++c) {
            const double d = dist(p, centers[c]);
            if (d < d1) {
                d2 = d1;
                d1 = d;
                nearest = static_cast<int>(c);
            } else if (d < d2) {
                d2 = d;
            }
        }
        if (d2 - d1 < 1e-9) continue; // boundary tie excluded
        ++checked;
        int member = -1;
        for (const auto& r : regions) {
            if (region_contains(r, p, 1e-12)) {
                member = r.index;
                break;
            }
        }
        REQUIRE(member == nearest);
    }
    CHECK(checked > 9000);
}

TEST_CASE("voronoi: error cases") {
    CHECK_THROWS_AS(voronoi_partition({Point{1, 1}, Point{1, 1}}, BBox{0, 0, 4, 2}), DuplicateCenters);
    CHECK_THROWS_AS(voronoi_partition({Point{1, 1}, Point{5, 1}}, BBox{0, 0, 4, 2}), CenterOutsideBox);
    CHECK_THROWS_AS(voronoi_partition({Point{1, 1}}, BBox{0, 0, 4, 2}), DegenerateInput);
}

TEST_CASE("shared_border_length: worked examples") {
    const double tol = 1e-9;
    CHECK(shared_border_length(seg(0, 0, 4, 0), seg(2, 0, 6, 0), tol) == doctest::Approx(2.0));
    CHECK(shared_border_length(seg(0, 0, 1, 1), seg(0, 1, 1, 0), tol) == 0.0);
    CHECK(shared_border_length(seg(0, 0, 2, 2), seg(1, 1, 5, 5), tol) ==
          doctest::Approx(std::sqrt(2.0)));
    // parallel but offset carriers
    CHECK(shared_border_length(seg(0, 0, 4, 0), seg(0, 1, 4, 1), tol) == 0.0);
    // verticals take the y-axis interval route
    CHECK(shared_border_length(seg(0, 0, 0, 4), seg(0, 2, 0, 6), tol) == doctest::Approx(2.0));
    CHECK(shared_border_length(seg(0, 0, 0, 4), seg(1, 2, 1, 6), tol) == 0.0);
    // touching at a point has zero overlap length
    CHECK(shared_border_length(seg(0, 0, 1, 0), seg(1, 0, 2, 0), tol) == 0.0);
}

TEST_CASE("shared_border_length: randomized collinear pairs match the interval oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 10000; ++trial) {
        const Point origin{rng.uniform(-50, 50), rng.uniform(-50, 50)};
        double angle = rng.uniform(0, 6.283185307179586);
        const Point dir{std::cos(angle), std::sin(angle)};
        const double a0 = rng.uniform(-10, 10), a1 = rng.uniform(-10, 10);
        const double b0 = rng.uniform(-10, 10), b1 = rng.uniform(-10, 10);
        if (std::fabs(a1 - a0) < 1e-6 || std::fabs(b1 - b0) < 1e-6) continue;
        auto at = [&](double t) { return Point{origin.x + t * dir.x, origin.y + t * dir.y}; };
        const Segment s1{at(a0), at(a1)};
        const Segment s2{at(b0), at(b1)};
        const double expected = overlap_oracle(origin, dir, a0, a1, b0, b1);
        const double got = shared_border_length(s1, s2, 1e-9 * 200.0);
        CHECK(got == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("shared_border_length: non-parallel pairs return exactly zero") {
    Rng rng(77);
    int checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const Segment s1{Point{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                         Point{rng.uniform(-10, 10), rng.uniform(-10, 10)}};
        const Segment s2{Point{rng.uniform(-10, 10), rng.uniform(-10, 10)},
                         Point{rng.uniform(-10, 10), rng.uniform(-10, 10)}};
        const double d1x = s1.p2.x - s1.p1.x, d1y = s1.p2.y - s1.p1.y;
        const double d2x = s2.p2.x - s2.p1.x, d2y = s2.p2.y - s2.p1.y;
        const double cross = d1x * d2y - d1y * d2x;
        const double scale = std::hypot(d1x, d1y) * std::hypot(d2x, d2y);
        if (scale == 0.0 || std::fabs(cross) <= 1e-9 * scale) continue;
        ++checked;
        CHECK(shared_border_length(s1, s2, 1e-9) == 0.0);
    }
    CHECK(checked > 9900);
}

TEST_CASE("shared_border_length: commutative, swap- and translation-invariant") {
    Rng rng(31337);
    for (int trial = 0; trial < 10000; ++trial) {
        Segment s1, s2;
        if (trial % 2 == 0) {
            // collinear pair
            const Point origin{rng.uniform(-5, 5), rng.uniform(-5, 5)};
            const double angle = rng.uniform(0, 6.283185307179586);
            const Point dir{std::cos(angle), std::sin(angle)};
            auto at = [&](double t) { return Point{origin.x + t * dir.x, origin.y + t * dir.y}; };
            s1 = Segment{at(rng.uniform(-8, 8)), at(rng.uniform(-8, 8))};
            s2 = Segment{at(rng.uniform(-8, 8)), at(rng.uniform(-8, 8))};
        } else {
            s1 = Segment{Point{rng.uniform(-8, 8), rng.uniform(-8, 8)},
                         Point{rng.uniform(-8, 8), rng.uniform(-8, 8)}};
            s2 = Segment{Point{rng.uniform(-8, 8), rng.uniform(-8, 8)},
                         Point{rng.uniform(-8, 8), rng.uniform(-8, 8)}};
        }
        if (s1.length() < 1e-9 || s2.length() < 1e-9) continue;
        const double tol = 1e-9 * 32.0;
        const double base = shared_border_length(s1, s2, tol);
        CHECK(shared_border_length(s2, s1, tol) == base);
        CHECK(shared_border_length(Segment{s1.p2, s1.p1}, s2, tol) == base);

        const Point shift{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        auto moved = [&](const Segment& s) {
            return Segment{Point{s.p1.x + shift.x, s.p1.y + shift.y},
                           Point{s.p2.x + shift.x, s.p2.y + shift.y}};
        };
        CHECK(shared_border_length(moved(s1), moved(s2), tol) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("shared_border_length: a segment overlaps itself fully") {
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Segment s{Point{rng.uniform(-9, 9), rng.uniform(-9, 9)},
                        Point{rng.uniform(-9, 9), rng.uniform(-9, 9)}};
        if (s.length() < 1e-9) continue;
        CHECK(shared_border_length(s, s, 1e-9) == doctest::Approx(s.length()).epsilon(1e-12));
    }
}

TEST_CASE("region_perimeter: squares, rectangles, and a vertex-walk oracle") {
    auto grid = testsupport::unit_grid_regions();
    CHECK(region_perimeter(grid[0]) == doctest::Approx(4.0));
    auto rects = testsupport::two_rect_regions();
    CHECK(region_perimeter(rects[0]) == doctest::Approx(8.0));

    Rng gen(3);
    std::vector<Point> centers;
    for (int i = 0; i < 6; ++i) centers.push_back(Point{gen.uniform(0, 10), gen.uniform(0, 10)});
    auto regions = voronoi_partition(centers, BBox{0, 0, 10, 10});
    for (const auto& r : regions) {
        const auto vs = r.vertices();
        double walk = 0.0;
        for (std::size_t i = 0; i < vs.size(); ++i) {
            walk += dist(vs[i], vs[(i + 1) % vs.size()]);
        }
        CHECK(region_perimeter(r) == doctest::Approx(walk).epsilon(1e-9));
    }
}

TEST_CASE("shared_borders_adjacency: unit grid fixture") {
    auto grid = testsupport::unit_grid_regions();
    auto a = shared_borders_adjacency(grid, 1e-9);
    REQUIRE(a.n == 4);
    for (int i = 0; i < 4; ++i) CHECK(a.at(i, i) == doctest::Approx(4.0));
    // row-major indices: 0-1 and 2-3 horizontal neighbors, 0-2 and 1-3 vertical
    CHECK(a.at(0, 1) == doctest::Approx(1.0));
    CHECK(a.at(0, 2) == doctest::Approx(1.0));
    CHECK(a.at(1, 3) == doctest::Approx(1.0));
    CHECK(a.at(2, 3) == doctest::Approx(1.0));
    CHECK(a.at(0, 3) == 0.0); // diagonal pair
    CHECK(a.at(1, 2) == 0.0);

    auto norm = normalize_adjacency_weights(a);
    for (int i = 0; i < 4; ++i) CHECK(norm.at(i, i) == 1.0);
    CHECK(norm.at(0, 1) == 0.25);
    CHECK(norm.at(0, 3) == 0.0);
}

TEST_CASE("shared_borders_adjacency: two rectangles and disjoint squares") {
    auto rects = testsupport::two_rect_regions();
    auto a = shared_borders_adjacency(rects, 1e-9);
    CHECK(a.at(0, 1) == doctest::Approx(2.0));
    CHECK(a.at(0, 0) == doctest::Approx(8.0));
    CHECK(a.at(1, 1) == doctest::Approx(8.0));

    auto disjoint = std::vector<Region>{
        make_region(0, Point{0.5, 0.5}, {Point{0, 0}, Point{1, 0}, Point{1, 1}, Point{0, 1}}),
        make_region(1, Point{5.5, 5.5}, {Point{5, 5}, Point{6, 5}, Point{6, 6}, Point{5, 6}})};
    auto b = shared_borders_adjacency(disjoint, 1e-9);
    CHECK(b.at(0, 1) == 0.0);
}

TEST_CASE("shared_borders_adjacency: positive entries are true voronoi neighbors") {
    Rng gen(12);
    std::vector<Point> centers;
    for (int i = 0; i < 7; ++i) centers.push_back(Point{gen.uniform(0, 10), gen.uniform(0, 10)});
    const BBox bbox{0, 0, 10, 10};
    auto regions = voronoi_partition(centers, bbox);
    auto a = shared_borders_adjacency(regions, default_border_tol(bbox));

    for (int i = 0; i < a.n; ++i) {
        double off_diag = 0.0;
        for (int j = 0; j < a.n; ++j) {
            CHECK(a.at(i, j) >= 0.0);
            CHECK(a.at(i, j) == a.at(j, i));
            if (i == j) continue;
            off_diag += a.at(i, j);
            if (a.at(i, j) > 0.0) {
                // find a point interior to the shared border and assert both
                // centers are jointly nearest there
                bool verified = false;
                for (const auto& bi : regions[i].borders) {
                    for (const auto& bj : regions[j].borders) {
                        if (shared_border_length(bi, bj, default_border_tol(bbox)) <= 0.0) continue;
                        const Point mid{(std::max(std::min(bi.p1.x, bi.p2.x), std::min(bj.p1.x, bj.p2.x)) +
                                         std::min(std::max(bi.p1.x, bi.p2.x), std::max(bj.p1.x, bj.p2.x))) / 2.0,
                                        (std::max(std::min(bi.p1.y, bi.p2.y), std::min(bj.p1.y, bj.p2.y)) +
                                         std::min(std::max(bi.p1.y, bi.p2.y), std::max(bj.p1.y, bj.p2.y))) / 2.0};
                        const double di = dist(mid, centers[i]);
                        const double dj = dist(mid, centers[j]);
                        CHECK(di == doctest::Approx(dj).epsilon(1e-6));
                        for (std::size_t o = 0; o < centers.size(); ++o) {
                            CHECK(dist(mid, centers[o]) >= di - 1e-6);
                        }
                        verified = true;
                    }
                }
                CHECK(verified);
            }
        }
        // shared borders cannot exceed the perimeter; strict because every cell
        // of this fixture touches the bbox or another cell boundary
        CHECK(off_diag <= region_perimeter(regions[i]) + 1e-9);
    }
}

TEST_CASE("normalize_adjacency_weights: examples, errors, argmax pattern") {
    WeightedAdjacency a(2);
    a.at(0, 0) = 4;
    a.at(0, 1) = 1;
    a.at(1, 0) = 1;
    a.at(1, 1) = 4;
    auto n = normalize_adjacency_weights(a);
    CHECK(n.at(0, 0) == 1.0);
    CHECK(n.at(0, 1) == 0.25);

    WeightedAdjacency ident(2);
    ident.at(0, 0) = 4;
    ident.at(1, 1) = 4;
    auto ni = normalize_adjacency_weights(ident);
    CHECK(ni.at(0, 0) == 1.0);
    CHECK(ni.at(0, 1) == 0.0);

    CHECK_THROWS_AS(normalize_adjacency_weights(WeightedAdjacency(3)), AllZero);

    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        WeightedAdjacency w(4);
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) {
                const double v = rng.uniform(0, 9);
                w.at(i, j) = v;
                w.at(j, i) = v;
            }
        auto nw = normalize_adjacency_weights(w);
        double max_before = *std::max_element(w.entries.begin(), w.entries.end());
        for (std::size_t e = 0; e < w.entries.size(); ++e) {
            CHECK((w.entries[e] == max_before) == (nw.entries[e] == 1.0));
        }
    }
}

TEST_CASE("regions and adjacency round-trip through their file formats") {
    Rng gen(3);
    std::vector<Point> centers;
    for (int i = 0; i < 6; ++i) centers.push_back(Point{gen.uniform(0, 10), gen.uniform(0, 10)});
    const BBox bbox{0, 0, 10, 10};
    auto regions = voronoi_partition(centers, bbox);

    const std::string dir = "geom_roundtrip_tmp";
    save_regions(dir + ".json", regions, bbox);
    auto [loaded, loaded_box] = load_regions(dir + ".json");
    REQUIRE(loaded.size() == regions.size());
    CHECK(loaded_box.xmax == bbox.xmax);
    for (std::size_t i = 0; i < regions.size(); ++i) {
        CHECK(loaded[i].index == regions[i].index);
        CHECK(loaded[i].center.x == regions[i].center.x);
        REQUIRE(loaded[i].borders.size() == regions[i].borders.size());
        for (std::size_t b = 0; b < regions[i].borders.size(); ++b) {
            CHECK(loaded[i].borders[b].p1.x == regions[i].borders[b].p1.x);
            CHECK(loaded[i].borders[b].p1.y == regions[i].borders[b].p1.y);
        }
    }

    auto a = shared_borders_adjacency(regions, default_border_tol(bbox));
    save_adjacency(dir + ".csv", a);
    auto a2 = load_adjacency(dir + ".csv");
    REQUIRE(a2.n == a.n);
    for (std::size_t e = 0; e < a.entries.size(); ++e) CHECK(a2.entries[e] == a.entries[e]);
    std::remove((dir + ".json").c_str());
    std::remove((dir + ".csv").c_str());
}
