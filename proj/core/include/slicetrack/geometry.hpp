#pragma once

#include <optional>
#include <span>
#include <vector>

#include "slicetrack/types.hpp"

namespace slicetrack {

struct Polygon {
  std::vector<Point2> vertices;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Twice the signed area of triangle (o, a, b); positive for a left turn.
inline double cross(Point2 o, Point2 a, Point2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain. The result is strictly convex with positive
/// orientation, starting from the lexicographically smallest (x, y) vertex.
/// Collinear boundary points are dropped. Throws DegenerateInputError for
/// fewer than 3 distinct points or an all-collinear set.
Polygon convex_hull(std::span<const Point2> points);

/// Shoelace signed area (positive for positive orientation).
double signed_area(const Polygon& poly);

bool is_convex(const Polygon& poly);

/// True if p lies inside or on the boundary of the polygon.
bool contains(const Polygon& poly, Point2 p);

/// Pixel (i, j) is set iff its center (i + 0.5, j + 0.5) lies inside or on
/// the polygon. Convex polygons of either orientation take a scanline fast
/// path; other simple polygons are filled by even-odd crossings with the
/// same boundary-inclusive rule. Pixels outside the grid are clipped.
SliceMask rasterize(const Polygon& poly, int width, int height);

/// Dice coefficient 2|a & b| / (|a| + |b|). Two empty masks score 1.0.
/// Throws ValidationError on dimension mismatch.
double dsc(const SliceMask& a, const SliceMask& b);

/// Mean pixel-center coordinate of the set pixels; nullopt for an empty mask.
std::optional<Point2> centroid(const SliceMask& mask);

}  // namespace slicetrack
