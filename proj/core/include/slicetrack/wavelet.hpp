#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "slicetrack/types.hpp"

namespace slicetrack {

/// Dense real-valued grid, row-major.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Single-level Haar decomposition: approximation plus horizontal,
/// vertical and diagonal detail, each ceil(w/2) x ceil(h/2).
struct SubbandSet {
  Grid a;
  Grid h;
  Grid v;
  Grid d;
  Roi roi;
};

struct MagnitudeMap {
  Grid m;
  Roi roi;
};

class ThresholdPolicy {
 public:
  enum class Kind { absolute, quantile };

  /// Cells must exceed t. Throws ValidationError for t < 0.
  static ThresholdPolicy absolute(double t);
  /// t is the q-quantile of the map values. Throws ValidationError unless 0 < q < 1.
  static ThresholdPolicy quantile(double q);

  Kind kind() const { return kind_; }
  double value() const { return value_; }

  /// Threshold for a concrete map.
  double resolve(const MagnitudeMap& map) const;

  friend bool operator==(const ThresholdPolicy&, const ThresholdPolicy&) = default;

 private:
  ThresholdPolicy(Kind kind, double value) : kind_(kind), value_(value) {}
  Kind kind_ = Kind::quantile;
  double value_ = 0.95;
};

struct DetectParams {
  ThresholdPolicy threshold = ThresholdPolicy::quantile(0.95);
  double min_spacing = 4.0;                        // slice pixels
  std::optional<std::size_t> max_keypoints = 64;   // nullopt = unlimited

  friend bool operator==(const DetectParams&, const DetectParams&) = default;
};

/// Forward transform. For each 2x2 block [[p00, p01], [p10, p11]]:
///   A = (p00 + p01 + p10 + p11) / 2    H = (p00 + p01 - p10 - p11) / 2
///   V = (p00 - p01 + p10 - p11) / 2    D = (p00 - p01 - p10 + p11) / 2
/// Odd sizes are padded by replicating the last row/column. Throws
/// SizeError for images smaller than 2x2. `roi` records where the image
/// came from; it defaults to the full frame.
SubbandSet haar_dwt2(const GraySlice& roi_image, std::optional<Roi> roi = std::nullopt);

/// Inverse of haar_dwt2; returns the padded (even-sized) image.
Grid haar_idwt2(const SubbandSet& subbands);

/// M = |H| + |V| + |D| per cell.
MagnitudeMap magnitude(const SubbandSet& subbands);

/// Thresholds the map, keeps the strongest cells subject to a minimum
/// spacing and a cap, and maps each cell to its 2x2 block center in slice
/// coordinates: (roi.x0 + 2x + 0.5, roi.y0 + 2y + 0.5).
KeypointSet detect_keypoints(const MagnitudeMap& map, const DetectParams& params,
                             int slice_index = 0);

}  // namespace slicetrack
