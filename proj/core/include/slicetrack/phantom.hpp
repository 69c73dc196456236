#pragma once

#include <cstdint>
#include <vector>

#include "slicetrack/geometry.hpp"
#include "slicetrack/types.hpp"

namespace slicetrack::phantom {

/// Smooth random texture: a sum of isotropic Gaussian blobs squashed into
/// (0, 1). Evaluated at continuous coordinates, so shifted copies are exact.
class BlobTexture {
 public:
  /// Blobs are scattered uniformly over [0, extent_x) x [0, extent_y).
  BlobTexture(double extent_x, double extent_y, int blob_count, double sigma,
              std::uint32_t seed);

  double operator()(double x, double y) const;

  /// Pixel (i, j) samples the texture at (i - dx, j - dy): the content moves
  /// by (+dx, +dy).
  GraySlice render(int width, int height, double dx = 0.0, double dy = 0.0) const;

 private:
  struct Blob {
    double x, y, amplitude;
  };
  std::vector<Blob> blobs_;
  double sigma_;
};

/// A textured annulus on a flat background, optionally translating by a
/// fixed amount per slice. Geometry is in continuous image coordinates
/// where pixel i spans [i, i + 1); pixel intensities sample the center.
struct RingPhantom {
  int width = 128;
  int height = 128;
  int slices = 32;
  int reference_slice = 16;  // slice where the ring sits at `center`
  Point2 center{64.0, 64.0};
  Point2 drift_per_slice{0.0, 0.0};
  double inner_radius = 18.0;
  double outer_radius = 34.0;
  double background = 0.1;
  std::uint32_t seed = 7;

  Point2 center_at(int slice) const;
  Volume volume() const;
  GraySlice render(int slice) const;
  /// Pixels whose centers lie inside the outer circle (the filled ring).
  SliceMask truth_mask(int slice) const;
  /// `count` points evenly spaced on the outer circle.
  std::vector<Point2> outer_points(int slice, int count = 40) const;
  /// Regular polygon approximating the outer circle, for annotation files.
  Polygon outline(int slice, int vertices = 180) const;
};

/// Bright axis-aligned square on a dark background.
GraySlice square_slice(int width, int height, int x0, int y0, int side, double foreground = 0.9,
                       double background = 0.1);

}  // namespace slicetrack::phantom
