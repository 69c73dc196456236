#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace slicetrack {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// A single grayscale slice with intensities normalized to [0, 1], stored
/// row-major (index = y * width + x).
class GraySlice {
 public:
  GraySlice() = default;

  /// Throws ValidationError if the sizes disagree or any value is outside
  /// [0, 1] (NaN included).
  GraySlice(int width, int height, std::vector<double> intensities);

  /// Constant-valued slice.
  static GraySlice filled(int width, int height, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return intensities_.empty(); }

  double at(int x, int y) const {
    return intensities_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const double> intensities() const { return intensities_; }

  friend bool operator==(const GraySlice&, const GraySlice&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> intensities_;
};

/// Integer-valued slice as read from disk, prior to normalization.
struct RawSlice {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> values;
};

/// Ordered stack of equally-sized slices. Index 0 is the first slice in
/// load order; decreasing index is "up", increasing is "down".
class Volume {
 public:
  Volume() = default;
  Volume(std::vector<GraySlice> slices, double slice_spacing_mm = 1.0,
         std::vector<std::string> source_ids = {});

  std::size_t size() const { return slices_.size(); }
  int width() const { return slices_.front().width(); }
  int height() const { return slices_.front().height(); }
  const GraySlice& slice(std::size_t i) const { return slices_.at(i); }
  const std::vector<GraySlice>& slices() const { return slices_; }
  double slice_spacing_mm() const { return slice_spacing_mm_; }
  const std::vector<std::string>& source_ids() const { return source_ids_; }

 private:
  std::vector<GraySlice> slices_;
  double slice_spacing_mm_ = 1.0;
  std::vector<std::string> source_ids_;
};

/// Axis-aligned rectangle in pixel units. Even sizes are preferred since
/// the Haar transform pads odd sizes by edge replication.
struct Roi {
  int x0 = 0;
  int y0 = 0;
  int width = 2;
  int height = 2;

  /// Throws ValidationError for negative origins or sides below 2.
  void validate() const;
  /// Throws BoundsError unless the rectangle lies inside a width x height image.
  void require_inside(int image_width, int image_height) const;

  friend bool operator==(const Roi&, const Roi&) = default;
};

enum class KeypointStatus : std::uint8_t {
  live,
  lost_out_of_bounds,
  lost_diverged,
  lost_untrackable,
};

const char* to_string(KeypointStatus status);
/// Inverse of to_string; throws ValidationError on unknown names.
KeypointStatus keypoint_status_from_string(const std::string& name);

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  KeypointStatus status = KeypointStatus::live;

  bool live() const { return status == KeypointStatus::live; }
  Point2 position() const { return {x, y}; }

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Keypoints attached to one slice. Identity is positional: point k on one
/// slice is point k on its neighbors.
struct KeypointSet {
  int slice_index = 0;
  std::vector<Keypoint> points;

  std::size_t live_count() const;
  std::vector<Point2> live_positions() const;

  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

class SliceMask {
 public:
  SliceMask() = default;
  SliceMask(int width, int height);
  SliceMask(int width, int height, std::vector<std::uint8_t> bits);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool value = true) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }

  /// Number of set pixels.
  std::size_t count() const;
  bool any() const { return count() != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }

  /// Pixelwise OR; throws ValidationError on dimension mismatch.
  SliceMask& operator|=(const SliceMask& other);

  friend bool operator==(const SliceMask&, const SliceMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;  // 0 or 1
};

/// Lucas-Kanade tracking parameters. Intensity-based thresholds assume
/// intensities normalized to [0, 1].
struct TrackParams {
  int pyramid_levels = 3;
  int window_radius = 10;
  int max_iterations = 30;
  double convergence_eps = 0.01;
  double min_eigenvalue = 1e-4;
  std::optional<double> fb_error_max = 1.0;  // nullopt disables the check

  int window_size() const { return 2 * window_radius + 1; }

  /// Checks value ranges; throws ConfigError.
  void validate() const;
  /// Also checks that the window fits the coarsest level of an image of the
  /// given size; throws ConfigError.
  void validate_for(int image_width, int image_height) const;

  friend bool operator==(const TrackParams&, const TrackParams&) = default;
};

/// Copies the ROI out of a slice. Throws BoundsError if it does not fit.
GraySlice crop(const GraySlice& slice, const Roi& roi);

/// Maps raw integer intensities to [0, 1] by dividing by max_value.
/// Throws ValidationError if max_value is zero or a value exceeds it.
GraySlice normalize_intensities(const RawSlice& raw, std::uint32_t max_value);

}  // namespace slicetrack
