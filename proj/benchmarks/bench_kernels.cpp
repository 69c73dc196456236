#include <benchmark/benchmark.h>

#include <random>

#include "slicetrack/flow.hpp"
#include "slicetrack/geometry.hpp"
#include "slicetrack/phantom.hpp"
#include "slicetrack/pipeline.hpp"
#include "slicetrack/wavelet.hpp"

using namespace slicetrack;

static void BM_HaarDwt(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GraySlice img = phantom::BlobTexture(n, n, 200, 3.0, 1).render(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(haar_dwt2(img));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_HaarDwt)->Arg(64)->Arg(256)->Arg(512);

static void BM_DetectKeypoints(benchmark::State& state) {
  const GraySlice img = phantom::BlobTexture(256, 256, 400, 3.0, 2).render(256, 256);
  const MagnitudeMap map = magnitude(haar_dwt2(img));
  const DetectParams params;
  for (auto _ : state) benchmark::DoNotOptimize(detect_keypoints(map, params));
}
BENCHMARK(BM_DetectKeypoints);

static void BM_TrackSet(benchmark::State& state) {
  const phantom::BlobTexture tex(256, 256, 400, 3.0, 3);
  const GraySlice a = tex.render(256, 256);
  const GraySlice b = tex.render(256, 256, 1.5, -0.5);
  const TrackParams params;
  const Pyramid pa = build_pyramid(a, params.pyramid_levels);
  const Pyramid pb = build_pyramid(b, params.pyramid_levels);
  KeypointSet pts{0, {}};
  for (int i = 0; i < state.range(0); ++i)
    pts.points.push_back({48.0 + (i * 37) % 160, 48.0 + (i * 61) % 160, KeypointStatus::live});
  for (auto _ : state) benchmark::DoNotOptimize(track_set(pa, pb, pts, params, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrackSet)->Arg(16)->Arg(64);

static void BM_ConvexHull(benchmark::State& state) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 512.0);
  std::vector<Point2> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {u(rng), u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(convex_hull(pts));
}
BENCHMARK(BM_ConvexHull)->Arg(64)->Arg(4096);

static void BM_Rasterize(benchmark::State& state) {
  const Polygon poly = phantom::RingPhantom{}.outline(16, 64);
  for (auto _ : state) benchmark::DoNotOptimize(rasterize(poly, 128, 128));
}
BENCHMARK(BM_Rasterize);

static void BM_Propagate(benchmark::State& state) {
  const phantom::RingPhantom ring;
  const Volume vol = ring.volume();
  const SeedSpec seed{ManualSeed{ring.outer_points(16)}, 16};
  const KeypointSet initial = seed_keypoints(vol, seed);
  const TrackParams params;
  for (auto _ : state) benchmark::DoNotOptimize(propagate(vol, initial, params, seed));
}
BENCHMARK(BM_Propagate)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
