#include "slicetrack/pipeline.hpp"

#include <algorithm>
#include <future>
#include <sstream>

#include "slicetrack/error.hpp"
#include "slicetrack/flow.hpp"
#include "slicetrack/stats.hpp"

namespace slicetrack {
namespace {

constexpr std::size_t kMinLivePoints = 3;

SliceProducts close_slice(KeypointSet keypoints, int width, int height) {
  SliceProducts out{std::move(keypoints), std::nullopt, std::nullopt};
  const auto live = out.keypoints.live_positions();
  if (live.size() < kMinLivePoints) return out;
  try {
    Polygon hull = convex_hull(live);
    out.mask = rasterize(hull, width, height);
    out.hull = std::move(hull);
  } catch (const DegenerateInputError&) {
    // Collinear live points: no mask on this slice.
  }
  return out;
}

struct ChainOutput {
  std::vector<SliceProducts> slices;  // in visiting order
  int stop = 0;
};

// Walks from `start` toward `end` (inclusive) one slice at a time.
ChainOutput run_chain(const Volume& volume, const KeypointSet& initial, const TrackParams& params,
                      int start, int end) {
  ChainOutput out{{}, start};
  if (start == end) return out;
  const int step = end > start ? 1 : -1;
  Pyramid prev = build_pyramid(volume.slice(start), params.pyramid_levels);
  KeypointSet current = initial;
  for (int i = start + step;; i += step) {
    Pyramid next = build_pyramid(volume.slice(i), params.pyramid_levels);
    current = track_set(prev, next, current, params, i);
    out.slices.push_back(close_slice(current, volume.width(), volume.height()));
    out.stop = i;
    if (current.live_count() < kMinLivePoints || i == end) break;
    prev = std::move(next);
  }
  return out;
}

}  // namespace

int resolve_start_slice(const Volume& volume, const SeedSpec& seed) {
  const int n = static_cast<int>(volume.size());
  const int start = seed.start_slice.value_or(n / 2);
  if (start < 0 || start >= n) {
    std::ostringstream msg;
    msg << "start slice " << start << " outside volume of " << n << " slices";
    throw SeedError(msg.str());
  }
  return start;
}

std::map<int, SliceMask> SegmentationResult::masks() const {
  std::map<int, SliceMask> out;
  for (const auto& [index, products] : per_slice) {
    if (products.mask) out.emplace(index, *products.mask);
  }
  return out;
}

std::size_t VoxelVolume::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

KeypointSet seed_keypoints(const Volume& volume, const SeedSpec& seed) {
  const int start = resolve_start_slice(volume, seed);
  const int w = volume.width();
  const int h = volume.height();

  if (const auto* manual = std::get_if<ManualSeed>(&seed.mode)) {
    if (manual->points.size() < kMinLivePoints) {
      throw SeedError("manual seeding needs at least 3 points, got " +
                      std::to_string(manual->points.size()));
    }
    KeypointSet out{start, {}};
    for (const auto& p : manual->points) {
      if (!(p.x >= 0.0 && p.x < w && p.y >= 0.0 && p.y < h)) {
        std::ostringstream msg;
        msg << "seed point (" << p.x << ", " << p.y << ") outside " << w << "x" << h << " slice";
        throw SeedError(msg.str());
      }
      out.points.push_back({p.x, p.y, KeypointStatus::live});
    }
    return out;
  }

  const auto& automatic = std::get<AutoSeed>(seed.mode);
  const GraySlice roi_image = crop(volume.slice(start), automatic.roi);
  const MagnitudeMap map = magnitude(haar_dwt2(roi_image, automatic.roi));
  KeypointSet out = detect_keypoints(map, automatic.detect, start);
  if (out.points.size() < kMinLivePoints) {
    std::ostringstream msg;
    msg << "automatic seeding found " << out.points.size()
        << " keypoint(s) in the ROI, at least 3 are needed; try a lower threshold";
    throw SeedError(msg.str());
  }
  return out;
}

SegmentationResult propagate(const Volume& volume, const KeypointSet& initial,
                             const TrackParams& params, const SeedSpec& seed) {
  const int n = static_cast<int>(volume.size());
  const int start = initial.slice_index;
  if (start < 0 || start >= n) throw ValidationError("initial keypoints reference a missing slice");
  params.validate_for(volume.width(), volume.height());

  SegmentationResult result;
  result.seed = seed;
  result.params = params;
  result.start_slice = start;
  result.width = volume.width();
  result.height = volume.height();
  result.slice_count = n;
  result.per_slice.emplace(start, close_slice(initial, volume.width(), volume.height()));

  // The chains touch disjoint slices and share only read-only inputs.
  auto up = std::async(std::launch::async, run_chain, std::cref(volume), std::cref(initial),
                       std::cref(params), start, 0);
  ChainOutput down = run_chain(volume, initial, params, start, n - 1);
  ChainOutput upward = up.get();

  for (auto& products : upward.slices) {
    const int index = products.keypoints.slice_index;
    result.per_slice.emplace(index, std::move(products));
  }
  for (auto& products : down.slices) {
    const int index = products.keypoints.slice_index;
    result.per_slice.emplace(index, std::move(products));
  }
  result.stop_up = upward.stop;
  result.stop_down = down.stop;
  return result;
}

SegmentationResult segment(const Volume& volume, const SeedSpec& seed,
                           const TrackParams& params) {
  params.validate_for(volume.width(), volume.height());
  return propagate(volume, seed_keypoints(volume, seed), params, seed);
}

MetricsReport summarize(std::map<int, double> per_slice_dsc) {
  if (per_slice_dsc.empty()) {
    throw EvaluationError("no slices to evaluate; at least one annotated slice is required");
  }
  std::vector<double> values;
  values.reserve(per_slice_dsc.size());
  for (const auto& [index, value] : per_slice_dsc) values.push_back(value);

  MetricsReport report;
  report.mean = stats::mean(values);
  report.std = stats::population_std(values);
  report.median = stats::quantile(values, 0.5);
  report.iqr_low = stats::quantile(values, 0.25);
  report.iqr_high = stats::quantile(values, 0.75);
  report.n_evaluated = values.size();
  report.n_zero = static_cast<std::size_t>(std::count(values.begin(), values.end(), 0.0));
  report.per_slice_dsc = std::move(per_slice_dsc);
  return report;
}

MetricsReport evaluate_masks(const std::map<int, SliceMask>& predicted,
                             const std::map<int, SliceMask>& truth, int width, int height,
                             bool include_empty_truth) {
  const SliceMask empty(width, height);
  std::map<int, double> scores;
  for (const auto& [index, truth_mask] : truth) {
    if (truth_mask.width() != width || truth_mask.height() != height) {
      throw ValidationError("ground-truth mask for slice " + std::to_string(index) +
                            " does not match volume dimensions");
    }
    if (!include_empty_truth && !truth_mask.any()) continue;
    const auto it = predicted.find(index);
    scores[index] = dsc(it == predicted.end() ? empty : it->second, truth_mask);
  }
  return summarize(std::move(scores));
}

MetricsReport evaluate(const SegmentationResult& result, const std::map<int, SliceMask>& truth,
                       bool include_empty_truth) {
  return evaluate_masks(result.masks(), truth, result.width, result.height, include_empty_truth);
}

VoxelVolume reconstruct(const SegmentationResult& result, double in_plane_mm, double spacing_mm) {
  if (!(in_plane_mm > 0.0) || !(spacing_mm > 0.0)) {
    throw ValidationError("voxel spacing must be positive");
  }
  const auto masks = result.masks();
  if (masks.empty()) throw ValidationError("segmentation result has no masks to reconstruct");

  VoxelVolume vol;
  vol.nx = result.width;
  vol.ny = result.height;
  vol.nz = result.slice_count;
  vol.sx = in_plane_mm;
  vol.sy = in_plane_mm;
  vol.sz = spacing_mm;
  const std::size_t plane = static_cast<std::size_t>(vol.nx) * vol.ny;
  vol.bits.assign(plane * vol.nz, 0);
  for (const auto& [index, mask] : masks) {
    const auto bits = mask.bits();
    std::copy(bits.begin(), bits.end(), vol.bits.begin() + static_cast<std::ptrdiff_t>(plane * index));
  }
  return vol;
}

}  // namespace slicetrack
