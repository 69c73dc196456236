#include "slicetrack/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace slicetrack::phantom {

BlobTexture::BlobTexture(double extent_x, double extent_y, int blob_count, double sigma,
                         std::uint32_t seed)
    : sigma_(sigma) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, extent_x);
  std::uniform_real_distribution<double> uy(0.0, extent_y);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  blobs_.reserve(static_cast<std::size_t>(blob_count));
  for (int i = 0; i < blob_count; ++i) blobs_.push_back({ux(rng), uy(rng), amp(rng)});
}

double BlobTexture::operator()(double x, double y) const {
  const double inv = 1.0 / (2.0 * sigma_ * sigma_);
  const double cutoff = 16.0 * sigma_ * sigma_;
  double acc = 0.0;
  for (const auto& b : blobs_) {
    const double dx = x - b.x;
    const double dy = y - b.y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < cutoff) acc += b.amplitude * std::exp(-d2 * inv);
  }
  return 0.5 + 0.45 * std::tanh(acc);
}

GraySlice BlobTexture::render(int width, int height, double dx, double dy) const {
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      out[static_cast<std::size_t>(j) * width + i] = (*this)(i - dx, j - dy);
    }
  }
  return GraySlice(width, height, std::move(out));
}

Point2 RingPhantom::center_at(int slice) const {
  const double k = slice - reference_slice;
  return {center.x + k * drift_per_slice.x, center.y + k * drift_per_slice.y};
}

GraySlice RingPhantom::render(int slice) const {
  // Texture lives in the ring's own frame so it moves rigidly with it.
  const double extent = 2.0 * outer_radius + 16.0;
  const BlobTexture texture(extent, extent, static_cast<int>(extent * extent / 12.0), 2.5, seed);
  const Point2 c = center_at(slice);
  auto smooth_step = [](double t) { return 1.0 / (1.0 + std::exp(-4.0 * t)); };

  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      const double rx = i + 0.5 - c.x;
      const double ry = j + 0.5 - c.y;
      const double r = std::hypot(rx, ry);
      const double band = smooth_step(outer_radius - r) * smooth_step(r - inner_radius);
      double value = background;
      if (band > 1e-9) value += band * (0.25 + 0.6 * texture(rx + extent / 2.0, ry + extent / 2.0));
      out[static_cast<std::size_t>(j) * width + i] = std::clamp(value, 0.0, 1.0);
    }
  }
  return GraySlice(width, height, std::move(out));
}

Volume RingPhantom::volume() const {
  std::vector<GraySlice> stack;
  stack.reserve(static_cast<std::size_t>(slices));
  for (int s = 0; s < slices; ++s) stack.push_back(render(s));
  return Volume(std::move(stack));
}

SliceMask RingPhantom::truth_mask(int slice) const {
  const Point2 c = center_at(slice);
  SliceMask mask(width, height);
  for (int j = 0; j < height; ++j) {
    for (int i = 0; i < width; ++i) {
      if (std::hypot(i + 0.5 - c.x, j + 0.5 - c.y) <= outer_radius) mask.set(i, j);
    }
  }
  return mask;
}

std::vector<Point2> RingPhantom::outer_points(int slice, int count) const {
  const Point2 c = center_at(slice);
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double a = 2.0 * M_PI * k / count;
    out.push_back({c.x + outer_radius * std::cos(a), c.y + outer_radius * std::sin(a)});
  }
  return out;
}

Polygon RingPhantom::outline(int slice, int vertices) const {
  return Polygon{outer_points(slice, vertices)};
}

GraySlice square_slice(int width, int height, int x0, int y0, int side, double foreground,
                       double background) {
  std::vector<double> out(static_cast<std::size_t>(width) * height, background);
  for (int y = std::max(y0, 0); y < std::min(y0 + side, height); ++y) {
    for (int x = std::max(x0, 0); x < std::min(x0 + side, width); ++x) {
      out[static_cast<std::size_t>(y) * width + x] = foreground;
    }
  }
  return GraySlice(width, height, std::move(out));
}

}  // namespace slicetrack::phantom
