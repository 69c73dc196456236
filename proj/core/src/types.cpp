#include "slicetrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slicetrack/error.hpp"

namespace slicetrack {

GraySlice::GraySlice(int width, int height, std::vector<double> intensities)
    : width_(width), height_(height), intensities_(std::move(intensities)) {
  if (width < 1 || height < 1) {
    throw ValidationError("slice dimensions must be positive");
  }
  if (intensities_.size() != static_cast<std::size_t>(width) * height) {
    std::ostringstream msg;
    msg << "slice has " << intensities_.size() << " intensities, expected "
        << width << "x" << height;
    throw ValidationError(msg.str());
  }
  for (double v : intensities_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("slice intensity outside [0, 1]");
    }
  }
}

GraySlice GraySlice::filled(int width, int height, double value) {
  if (width < 1 || height < 1) {
    throw ValidationError("slice dimensions must be positive");
  }
  return GraySlice(width, height,
                   std::vector<double>(static_cast<std::size_t>(width) * height, value));
}

Volume::Volume(std::vector<GraySlice> slices, double slice_spacing_mm,
               std::vector<std::string> source_ids)
    : slices_(std::move(slices)),
      slice_spacing_mm_(slice_spacing_mm),
      source_ids_(std::move(source_ids)) {
  if (slices_.empty()) {
    throw ValidationError("volume needs at least one slice");
  }
  if (!(slice_spacing_mm_ > 0.0)) {
    throw ValidationError("slice spacing must be positive");
  }
  const int w = slices_.front().width();
  const int h = slices_.front().height();
  for (std::size_t i = 0; i < slices_.size(); ++i) {
    if (slices_[i].width() != w || slices_[i].height() != h) {
      std::ostringstream msg;
      msg << "slice " << i << " is " << slices_[i].width() << "x"
          << slices_[i].height() << ", expected " << w << "x" << h;
      throw ValidationError(msg.str());
    }
  }
  if (source_ids_.empty()) {
    source_ids_.reserve(slices_.size());
    for (std::size_t i = 0; i < slices_.size(); ++i) {
      source_ids_.push_back(std::to_string(i));
    }
  } else if (source_ids_.size() != slices_.size()) {
    throw ValidationError("source id count does not match slice count");
  }
}

void Roi::validate() const {
  if (x0 < 0 || y0 < 0) {
    throw ValidationError("ROI origin must be non-negative");
  }
  if (width < 2 || height < 2) {
    throw ValidationError("ROI sides must be at least 2 pixels");
  }
}

void Roi::require_inside(int image_width, int image_height) const {
  validate();
  if (x0 + width > image_width || y0 + height > image_height) {
    std::ostringstream msg;
    msg << "ROI (" << x0 << "," << y0 << "," << width << "," << height
        << ") exceeds image bounds " << image_width << "x" << image_height;
    throw BoundsError(msg.str());
  }
}

const char* to_string(KeypointStatus status) {
  switch (status) {
    case KeypointStatus::live:
      return "live";
    case KeypointStatus::lost_out_of_bounds:
      return "lost_out_of_bounds";
    case KeypointStatus::lost_diverged:
      return "lost_diverged";
    case KeypointStatus::lost_untrackable:
      return "lost_untrackable";
  }
  return "unknown";
}

KeypointStatus keypoint_status_from_string(const std::string& name) {
  for (auto s : {KeypointStatus::live, KeypointStatus::lost_out_of_bounds,
                 KeypointStatus::lost_diverged, KeypointStatus::lost_untrackable}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("unknown keypoint status: " + name);
}

std::size_t KeypointSet::live_count() const {
  return static_cast<std::size_t>(
      std::count_if(points.begin(), points.end(), [](const Keypoint& k) { return k.live(); }));
}

std::vector<Point2> KeypointSet::live_positions() const {
  std::vector<Point2> out;
  out.reserve(points.size());
  for (const auto& k : points) {
    if (k.live()) out.push_back(k.position());
  }
  return out;
}

SliceMask::SliceMask(int width, int height)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), 0) {
  if (width < 1 || height < 1) {
    throw ValidationError("mask dimensions must be positive");
  }
}

SliceMask::SliceMask(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (width < 1 || height < 1) {
    throw ValidationError("mask dimensions must be positive");
  }
  if (bits_.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("mask bit count does not match dimensions");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t SliceMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

SliceMask& SliceMask::operator|=(const SliceMask& other) {
  if (other.width_ != width_ || other.height_ != height_) {
    throw ValidationError("mask dimension mismatch");
  }
  for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
  return *this;
}

void TrackParams::validate() const {
  if (pyramid_levels < 1) throw ConfigError("pyramid_levels must be >= 1");
  if (window_radius < 1) throw ConfigError("window_radius must be >= 1");
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(convergence_eps > 0.0)) throw ConfigError("convergence_eps must be > 0");
  if (!(min_eigenvalue >= 0.0)) throw ConfigError("min_eigenvalue must be >= 0");
  if (fb_error_max && !(*fb_error_max >= 0.0)) {
    throw ConfigError("fb_error_max must be >= 0");
  }
}

void TrackParams::validate_for(int image_width, int image_height) const {
  validate();
  int w = image_width;
  int h = image_height;
  for (int level = 1; level < pyramid_levels; ++level) {
    w /= 2;
    h /= 2;
  }
  if (w < window_size() || h < window_size()) {
    std::ostringstream msg;
    msg << "window of " << window_size() << " px does not fit coarsest pyramid level ("
        << w << "x" << h << ") of a " << image_width << "x" << image_height
        << " image with " << pyramid_levels << " levels";
    throw ConfigError(msg.str());
  }
}

GraySlice crop(const GraySlice& slice, const Roi& roi) {
  roi.require_inside(slice.width(), slice.height());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(roi.width) * roi.height);
  for (int y = roi.y0; y < roi.y0 + roi.height; ++y) {
    for (int x = roi.x0; x < roi.x0 + roi.width; ++x) {
      out.push_back(slice.at(x, y));
    }
  }
  return GraySlice(roi.width, roi.height, std::move(out));
}

GraySlice normalize_intensities(const RawSlice& raw, std::uint32_t max_value) {
  if (max_value == 0) throw ValidationError("max_value must be positive");
  if (raw.values.size() != static_cast<std::size_t>(raw.width) * raw.height) {
    throw ValidationError("raw slice size does not match dimensions");
  }
  std::vector<double> out;
  out.reserve(raw.values.size());
  const double scale = static_cast<double>(max_value);
  for (auto v : raw.values) {
    if (v > max_value) {
      throw ValidationError("raw intensity " + std::to_string(v) + " exceeds max value " +
                            std::to_string(max_value));
    }
    out.push_back(static_cast<double>(v) / scale);
  }
  return GraySlice(raw.width, raw.height, std::move(out));
}

}  // namespace slicetrack
