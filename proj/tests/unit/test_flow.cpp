#include <doctest.h>

#include <cmath>

#include "slicetrack/error.hpp"
#include "slicetrack/flow.hpp"
#include "slicetrack/phantom.hpp"

using namespace slicetrack;
using doctest::Approx;

namespace {

const phantom::BlobTexture& texture() {
  static const phantom::BlobTexture t(128.0, 128.0, 260, 3.0, 21);
  return t;
}

KeypointSet grid_points(int slice, double lo, double hi, double step) {
  KeypointSet s{slice, {}};
  for (double y = lo; y <= hi; y += step)
    for (double x = lo; x <= hi; x += step) s.points.push_back({x, y, KeypointStatus::live});
  return s;
}

}  // namespace

TEST_CASE("pyramid level sizes halve with floor") {
  const Pyramid p = build_pyramid(GraySlice::filled(101, 60, 0.3), 3);
  REQUIRE(p.size() == 3);
  CHECK(p.levels[1].width() == 50);
  CHECK(p.levels[1].height() == 30);
  CHECK(p.levels[2].width() == 25);
  CHECK(p.levels[2].height() == 15);
  CHECK(p.grad_x.size() == 3);
  CHECK(p.grad_y[2].width == 25);
}

TEST_CASE("pyramid uses 2x2 block means") {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i) / 15.0;
  const Pyramid p = build_pyramid(GraySlice(4, 4, v), 2);
  CHECK(p.levels[1].at(0, 0) == Approx((0 + 1 + 4 + 5) / 60.0));
  CHECK(p.levels[1].at(1, 1) == Approx((10 + 11 + 14 + 15) / 60.0));
}

TEST_CASE("pyramid rejects too many levels") {
  CHECK_THROWS_AS(build_pyramid(GraySlice::filled(8, 8, 0.0), 5), ConfigError);
  CHECK_THROWS_AS(build_pyramid(GraySlice::filled(8, 8, 0.0), 0), ConfigError);
  CHECK_NOTHROW(build_pyramid(GraySlice::filled(8, 8, 0.0), 3));
}

TEST_CASE("zero motion stays put") {
  const GraySlice img = texture().render(96, 96);
  const auto out = track_set(img, img, grid_points(0, 30, 66, 12), TrackParams{}, 1);
  CHECK(out.slice_index == 1);
  for (const auto& k : out.points) {
    REQUIRE(k.live());
  }
  const auto in = grid_points(0, 30, 66, 12);
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    CHECK(std::abs(out.points[i].x - in.points[i].x) < 1e-3);
    CHECK(std::abs(out.points[i].y - in.points[i].y) < 1e-3);
  }
}

TEST_CASE("recovers an integer translation") {
  const GraySlice a = texture().render(96, 96);
  const GraySlice b = texture().render(96, 96, 2.0, 1.0);
  const auto in = grid_points(0, 30, 66, 12);
  const auto out = track_set(a, b, in, TrackParams{}, 1);
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    REQUIRE(out.points[i].live());
    CHECK(std::abs(out.points[i].x - (in.points[i].x + 2.0)) < 0.1);
    CHECK(std::abs(out.points[i].y - (in.points[i].y + 1.0)) < 0.1);
  }
}

TEST_CASE("uniform region is untrackable") {
  const GraySlice flat = GraySlice::filled(64, 64, 0.5);
  TrackParams p;
  p.pyramid_levels = 2;
  const auto out = track_set(flat, flat, grid_points(0, 20, 44, 12), p, 1);
  for (const auto& k : out.points) CHECK(k.status == KeypointStatus::lost_untrackable);
}

TEST_CASE("window leaving the image is out of bounds") {
  const GraySlice img = texture().render(96, 96);
  KeypointSet s{0, {{3.0, 40.0, KeypointStatus::live}, {40.0, 94.0, KeypointStatus::live}}};
  const auto out = track_set(img, img, s, TrackParams{}, 1);
  for (const auto& k : out.points) CHECK(k.status == KeypointStatus::lost_out_of_bounds);
}

TEST_CASE("track_set bookkeeping") {
  const GraySlice a = texture().render(96, 96);
  const GraySlice b = texture().render(96, 96, 1.0, 0.0);

  SUBCASE("empty set") {
    const auto out = track_set(a, b, KeypointSet{0, {}}, TrackParams{}, 1);
    CHECK(out.points.empty());
    CHECK(out.slice_index == 1);
  }
  SUBCASE("lost points are frozen and never resurrected") {
    KeypointSet s{0,
                  {{40, 40, KeypointStatus::live},
                   {50, 40, KeypointStatus::lost_diverged},
                   {40, 50, KeypointStatus::live}}};
    auto out = track_set(a, b, s, TrackParams{}, 1);
    REQUIRE(out.points.size() == 3);
    CHECK(out.points[1].status == KeypointStatus::lost_diverged);
    CHECK(out.points[1].x == 50.0);
    CHECK(out.points[1].y == 40.0);
    for (int step = 2; step < 5; ++step) {
      out = track_set(b, b, out, TrackParams{}, step);
      CHECK(out.points[1].status == KeypointStatus::lost_diverged);
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(track_set(a, texture().render(90, 96), KeypointSet{0, {}}, TrackParams{}, 1),
                    ValidationError);
  }
  SUBCASE("window does not fit") {
    const GraySlice small = texture().render(40, 40);
    CHECK_THROWS_AS(track_set(small, small, KeypointSet{0, {}}, TrackParams{}, 1), ConfigError);
  }
  SUBCASE("live point outside the image") {
    KeypointSet s{0, {{-5.0, 10.0, KeypointStatus::live}}};
    CHECK_THROWS_AS(track_set(a, b, s, TrackParams{}, 1), ValidationError);
  }
}

TEST_CASE("one level and three levels agree on small motion") {
  const GraySlice a = texture().render(96, 96);
  const GraySlice b = texture().render(96, 96, 0.7, -0.4);
  const auto in = grid_points(0, 30, 66, 12);
  TrackParams one;
  one.pyramid_levels = 1;
  const auto fine = track_set(a, b, in, one, 1);
  const auto coarse = track_set(a, b, in, TrackParams{}, 1);
  for (std::size_t i = 0; i < in.points.size(); ++i) {
    REQUIRE(fine.points[i].live());
    REQUIRE(coarse.points[i].live());
    CHECK(std::abs(fine.points[i].x - coarse.points[i].x) < 0.05);
    CHECK(std::abs(fine.points[i].y - coarse.points[i].y) < 0.05);
  }
}

TEST_CASE("forward-backward error is small on clean translation") {
  const GraySlice a = texture().render(96, 96);
  const GraySlice b = texture().render(96, 96, -1.5, 2.0);
  const TrackParams params;
  const Pyramid pa = build_pyramid(a, params.pyramid_levels);
  const Pyramid pb = build_pyramid(b, params.pyramid_levels);
  for (const auto& k : grid_points(0, 30, 66, 12).points) {
    const TrackOutcome o = track_point(pa, pb, k, params);
    REQUIRE(o.point.live());
    REQUIRE(o.fb_error.has_value());
    CHECK(*o.fb_error < 0.02);
    CHECK(o.iterations_used >= 1);
  }
}

TEST_CASE("forward-backward check can be disabled") {
  const GraySlice a = texture().render(96, 96);
  TrackParams params;
  params.fb_error_max.reset();
  const Pyramid p = build_pyramid(a, params.pyramid_levels);
  const TrackOutcome o = track_point(p, p, {48.0, 48.0, KeypointStatus::live}, params);
  CHECK(o.point.live());
  CHECK_FALSE(o.fb_error.has_value());
}

TEST_CASE("pyramids must match the parameters") {
  const GraySlice a = texture().render(96, 96);
  const Pyramid two = build_pyramid(a, 2);
  CHECK_THROWS_AS(track_point(two, two, {48.0, 48.0, KeypointStatus::live}, TrackParams{}),
                  ValidationError);
}
