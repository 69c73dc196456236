#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "slicetrack/geometry.hpp"
#include "slicetrack/types.hpp"
#include "slicetrack/wavelet.hpp"

namespace slicetrack {

struct ManualSeed {
  std::vector<Point2> points;

  friend bool operator==(const ManualSeed&, const ManualSeed&) = default;
};

struct AutoSeed {
  Roi roi;
  DetectParams detect;

  friend bool operator==(const AutoSeed&, const AutoSeed&) = default;
};

struct SeedSpec {
  std::variant<ManualSeed, AutoSeed> mode;
  std::optional<int> start_slice;  // nullopt: floor(slice_count / 2)

  bool is_manual() const { return std::holds_alternative<ManualSeed>(mode); }

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

/// Index of the slice seeding happens on. Throws SeedError if out of range.
int resolve_start_slice(const Volume& volume, const SeedSpec& seed);

struct SliceProducts {
  KeypointSet keypoints;
  std::optional<Polygon> hull;
  std::optional<SliceMask> mask;

  friend bool operator==(const SliceProducts&, const SliceProducts&) = default;
};

struct SegmentationResult {
  std::map<int, SliceProducts> per_slice;
  SeedSpec seed;
  TrackParams params;
  int start_slice = 0;
  int stop_up = 0;    // lowest index reached by the upward chain
  int stop_down = 0;  // highest index reached by the downward chain
  int width = 0;
  int height = 0;
  int slice_count = 0;

  /// Slice index -> mask for every slice that has one.
  std::map<int, SliceMask> masks() const;

  friend bool operator==(const SegmentationResult&, const SegmentationResult&) = default;
};

struct MetricsReport {
  std::map<int, double> per_slice_dsc;
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
  double iqr_low = 0.0;   // 25th percentile
  double iqr_high = 0.0;  // 75th percentile
  std::size_t n_evaluated = 0;
  std::size_t n_zero = 0;
};

struct VoxelVolume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;
  std::vector<std::uint8_t> bits;  // z-major, then row-major within a plane

  std::size_t count() const;
};

/// Manual seeds are copied verbatim; automatic seeds run the Haar detector
/// on the ROI of the start slice. Throws SeedError for fewer than 3 seeds or
/// out-of-bounds points.
KeypointSet seed_keypoints(const Volume& volume, const SeedSpec& seed);

/// Tracks `initial` up (toward index 0) and down (toward the last index)
/// from its slice. A chain stops on the first slice with fewer than 3 live
/// points. Every visited slice gets a hull and mask when its live points
/// admit one.
SegmentationResult propagate(const Volume& volume, const KeypointSet& initial,
                             const TrackParams& params, const SeedSpec& seed = {});

/// Seeds and propagates in one call.
SegmentationResult segment(const Volume& volume, const SeedSpec& seed, const TrackParams& params);

/// Summary statistics over a set of per-slice scores. Throws
/// EvaluationError for an empty set.
MetricsReport summarize(std::map<int, double> per_slice_dsc);

/// Scores predictions against ground truth on every slice that has truth
/// (nonempty truth only, unless include_empty_truth). Missing predictions
/// count as empty masks. Throws EvaluationError when nothing is evaluated.
MetricsReport evaluate_masks(const std::map<int, SliceMask>& predicted,
                             const std::map<int, SliceMask>& truth, int width, int height,
                             bool include_empty_truth = false);

MetricsReport evaluate(const SegmentationResult& result, const std::map<int, SliceMask>& truth,
                       bool include_empty_truth = false);

/// Stacks per-slice masks into a voxel grid with spacing
/// (in_plane_mm, in_plane_mm, spacing_mm). Throws ValidationError if the
/// result has no masks.
VoxelVolume reconstruct(const SegmentationResult& result, double in_plane_mm = 1.0,
                        double spacing_mm = 1.0);

}  // namespace slicetrack
