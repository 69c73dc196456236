#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "slicetrack/error.hpp"
#include "slicetrack/geometry.hpp"

using namespace slicetrack;

namespace {

std::vector<Point2> random_points(std::mt19937& rng, int n, double extent, bool integer) {
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Point2> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p = {u(rng), u(rng)};
    if (integer) p = {std::floor(p.x), std::floor(p.y)};
  }
  return pts;
}

std::set<std::pair<double, double>> vertex_set(const Polygon& p) {
  std::set<std::pair<double, double>> s;
  for (auto v : p.vertices) s.insert({v.x, v.y});
  return s;
}

double perimeter(const Polygon& p) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    const auto a = p.vertices[i], b = p.vertices[(i + 1) % p.vertices.size()];
    sum += std::hypot(b.x - a.x, b.y - a.y);
  }
  return sum;
}

}  // namespace

TEST_CASE("convex_hull examples") {
  SUBCASE("square with interior point") {
    const std::vector<Point2> pts{{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 1}};
    const Polygon h = convex_hull(pts);
    CHECK(h.vertices == std::vector<Point2>{{0, 0}, {2, 0}, {2, 2}, {0, 2}});
    CHECK(signed_area(h) == 4.0);
  }
  SUBCASE("collinear boundary points are dropped") {
    const std::vector<Point2> pts{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}, {0, 1}};
    CHECK(convex_hull(pts).vertices.size() == 4);
  }
  SUBCASE("duplicates") {
    const std::vector<Point2> pts{{0, 0}, {0, 0}, {3, 0}, {0, 3}, {3, 0}};
    CHECK(convex_hull(pts).vertices.size() == 3);
  }
  SUBCASE("degenerate sets") {
    const std::vector<Point2> two{{0, 0}, {1, 1}};
    const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {5, 5}};
    const std::vector<Point2> same{{1, 1}, {1, 1}, {1, 1}};
    CHECK_THROWS_AS(convex_hull(two), DegenerateInputError);
    CHECK_THROWS_AS(convex_hull(line), DegenerateInputError);
    CHECK_THROWS_AS(convex_hull(same), DegenerateInputError);
  }
}

TEST_CASE("convex_hull matches the brute-force oracle") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = std::uniform_int_distribution<int>(3, 14)(rng);
    // Small integer grids produce duplicates and collinear runs.
    const auto pts = random_points(rng, n, trial % 2 ? 6.0 : 100.0, trial % 2 == 1);
    if (oracle::degenerate_set(pts)) {
      CHECK_THROWS_AS(convex_hull(pts), DegenerateInputError);
      continue;
    }
    const Polygon h = convex_hull(pts);
    REQUIRE(vertex_set(h) == oracle::hull_vertex_set(pts));
    REQUIRE(signed_area(h) > 0.0);
    REQUIRE(is_convex(h));
    for (auto p : pts) REQUIRE(contains(h, p));
    // Idempotent.
    REQUIRE(convex_hull(h.vertices) == h);
  }
}

TEST_CASE("rasterize examples") {
  SUBCASE("square on pixel edges") {
    const Polygon sq{{{1, 1}, {3, 1}, {3, 3}, {1, 3}}};
    const SliceMask m = rasterize(sq, 4, 4);
    CHECK(m.count() == 4);
    CHECK(m.at(1, 1));
    CHECK(m.at(2, 2));
    CHECK_FALSE(m.at(0, 0));
    CHECK_FALSE(m.at(3, 3));
  }
  SUBCASE("boundary through pixel centers is inclusive") {
    const Polygon sq{{{0.5, 0.5}, {2.5, 0.5}, {2.5, 2.5}, {0.5, 2.5}}};
    CHECK(rasterize(sq, 4, 4).count() == 9);
  }
  SUBCASE("orientation does not matter") {
    const Polygon ccw{{{0.2, 0.3}, {7.1, 1.0}, {4.0, 6.6}}};
    Polygon cw = ccw;
    std::reverse(cw.vertices.begin(), cw.vertices.end());
    CHECK(rasterize(ccw, 8, 8) == rasterize(cw, 8, 8));
  }
  SUBCASE("polygon outside the frame is clipped") {
    const Polygon far{{{-10, -10}, {-5, -10}, {-5, -5}}};
    CHECK(rasterize(far, 8, 8).count() == 0);
    const Polygon big{{{-10, -10}, {20, -10}, {20, 20}, {-10, 20}}};
    CHECK(rasterize(big, 8, 8).count() == 64);
  }
  SUBCASE("concave polygon") {
    // U shape: the notch column x in [2, 3) above y = 2 stays empty.
    const Polygon u{{{0, 0}, {5, 0}, {5, 5}, {3, 5}, {3, 2}, {2, 2}, {2, 5}, {0, 5}}};
    const SliceMask m = rasterize(u, 5, 5);
    CHECK(m.at(2, 1));
    CHECK_FALSE(m.at(2, 3));
    CHECK(m.at(1, 4));
    CHECK(m.count() == 22);
  }
}

TEST_CASE("rasterize matches pixel-center containment on convex polygons") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pts = random_points(rng, 3 + trial % 12, 40.0, trial % 4 == 0);
    if (oracle::degenerate_set(pts)) continue;
    Polygon h = convex_hull(pts);
    if (trial % 2) std::reverse(h.vertices.begin(), h.vertices.end());
    const SliceMask m = rasterize(h, 36, 36);
    REQUIRE(m == oracle::center_containment(h.vertices, 36, 36));

    // Each row is one contiguous run.
    for (int y = 0; y < 36; ++y) {
      int runs = 0;
      for (int x = 0; x < 36; ++x)
        if (m.at(x, y) && (x == 0 || !m.at(x - 1, y))) ++runs;
      REQUIRE(runs <= 1);
    }
  }
}

TEST_CASE("pixel count tracks polygon area") {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_points(rng, 8, 60.0, false);
    const Polygon h = convex_hull(pts);
    const double area = signed_area(h);
    const double count = static_cast<double>(rasterize(h, 64, 64).count());
    REQUIRE(std::abs(count - area) <= perimeter(h) + 4.0);
  }
}

TEST_CASE("dsc") {
  SliceMask a(4, 4), b(4, 4);
  CHECK(dsc(a, b) == 1.0);
  a.set(0, 0);
  CHECK(dsc(a, b) == 0.0);
  b.set(0, 0);
  CHECK(dsc(a, b) == 1.0);
  a.set(1, 0);
  b.set(2, 0);
  CHECK(dsc(a, b) == doctest::Approx(0.5));
  CHECK(dsc(a, b) == dsc(b, a));
  CHECK_THROWS_AS(dsc(a, SliceMask(4, 5)), ValidationError);

  std::mt19937 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    SliceMask x(9, 7), y(9, 7);
    for (int j = 0; j < 7; ++j)
      for (int i = 0; i < 9; ++i) {
        if (rng() % 3 == 0) x.set(i, j);
        if (rng() % 3 == 0) y.set(i, j);
      }
    const double d = dsc(x, y);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= 1.0);
    REQUIRE(d == dsc(y, x));
    REQUIRE(dsc(x, x) == 1.0);
  }
}

TEST_CASE("centroid") {
  SliceMask m(6, 6);
  CHECK_FALSE(centroid(m).has_value());
  m.set(1, 1);
  m.set(2, 1);
  const auto c = centroid(m);
  REQUIRE(c.has_value());
  CHECK(c->x == 2.0);
  CHECK(c->y == 1.5);
}
