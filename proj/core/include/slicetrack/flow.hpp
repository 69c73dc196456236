#pragma once

#include <optional>
#include <vector>

#include "slicetrack/types.hpp"
#include "slicetrack/wavelet.hpp"

namespace slicetrack {

/// Image pyramid built by 2x2 block averaging. Level 0 is full resolution;
/// level L is floor(level L-1 / 2) in each dimension. Central-difference
/// gradients of every level are cached for the tracker.
struct Pyramid {
  std::vector<GraySlice> levels;
  std::vector<Grid> grad_x;
  std::vector<Grid> grad_y;

  std::size_t size() const { return levels.size(); }
};

/// Throws ConfigError if levels < 1 or the coarsest level would be smaller
/// than 2x2.
Pyramid build_pyramid(const GraySlice& slice, int levels);

struct TrackOutcome {
  Keypoint point;
  int iterations_used = 0;
  double residual = 0.0;  // mean |prev - next| over the final window
  std::optional<double> fb_error;
};

/// Pyramidal iterative Lucas-Kanade for one point, followed by the
/// forward-backward check when params.fb_error_max is set. Points that are
/// not live are returned unchanged. A point that gets lost keeps its last
/// live coordinates.
///
/// Throws ValidationError if the pyramids disagree with each other or with
/// params.pyramid_levels, or if a live point lies outside level 0.
TrackOutcome track_point(const Pyramid& prev, const Pyramid& next, const Keypoint& p,
                         const TrackParams& params);

/// Tracks every point of `points` (which live on prev) onto next, whose
/// index becomes the result's slice_index. Order is preserved; lost points
/// are copied through unchanged.
KeypointSet track_set(const Pyramid& prev, const Pyramid& next, const KeypointSet& points,
                      const TrackParams& params, int next_index);

/// Convenience overload building both pyramids. Throws ValidationError on
/// dimension mismatch and ConfigError if the window does not fit.
KeypointSet track_set(const GraySlice& prev_slice, const GraySlice& next_slice,
                      const KeypointSet& points, const TrackParams& params, int next_index);

}  // namespace slicetrack
