#include "slicetrack/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "slicetrack/error.hpp"

namespace slicetrack {
namespace {

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return cross(a, b, p) == 0.0 && p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) &&
         p.y >= std::min(a.y, b.y) && p.y <= std::max(a.y, b.y);
}

// Inside-or-on test for a convex polygon with positive orientation.
bool convex_contains(const std::vector<Point2>& v, Point2 p) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(v[i], v[(i + 1) % n], p) < 0.0) return false;
  }
  return true;
}

// Scanline fill of a convex polygon with positive orientation and nonzero area.
void fill_convex(const std::vector<Point2>& v, SliceMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  double ymin = v[0].y, ymax = v[0].y;
  for (const auto& p : v) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_lo = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
  const int row_hi = std::min(h - 1, static_cast<int>(std::ceil(ymax - 0.5)));
  const std::size_t n = v.size();

  for (int j = row_lo; j <= row_hi; ++j) {
    const double yc = j + 0.5;
    double xl = INFINITY, xr = -INFINITY;
    for (std::size_t e = 0; e < n; ++e) {
      const Point2 a = v[e];
      const Point2 b = v[(e + 1) % n];
      if (yc < std::min(a.y, b.y) || yc > std::max(a.y, b.y)) continue;
      if (a.y == b.y) {
        xl = std::min({xl, a.x, b.x});
        xr = std::max({xr, a.x, b.x});
      } else {
        const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
        xl = std::min(xl, x);
        xr = std::max(xr, x);
      }
    }
    if (!(xl <= xr)) continue;
    // Columns whose centers fall in [xl, xr]; the two ends are re-decided
    // with the exact predicate to absorb rounding in the intersections.
    const int lo = static_cast<int>(std::ceil(xl - 0.5));
    const int hi = static_cast<int>(std::floor(xr - 0.5));
    const int scan_lo = std::max(0, lo - 1);
    const int scan_hi = std::min(w - 1, hi + 1);
    for (int i = scan_lo; i <= scan_hi; ++i) {
      const bool edge_zone = i <= lo + 1 || i >= hi - 1;
      if (!edge_zone || convex_contains(v, {i + 0.5, yc})) mask.set(i, j);
    }
  }
}

void fill_general(const Polygon& poly, SliceMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  const auto& v = poly.vertices;
  double xmin = v[0].x, xmax = v[0].x, ymin = v[0].y, ymax = v[0].y;
  for (const auto& p : v) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_lo = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
  const int row_hi = std::min(h - 1, static_cast<int>(std::ceil(ymax - 0.5)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(xmin - 0.5)));
  const int col_hi = std::min(w - 1, static_cast<int>(std::ceil(xmax - 0.5)));
  for (int j = row_lo; j <= row_hi; ++j) {
    for (int i = col_lo; i <= col_hi; ++i) {
      if (contains(poly, {i + 0.5, j + 0.5})) mask.set(i, j);
    }
  }
}

}  // namespace

Polygon convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    throw DegenerateInputError("convex hull needs at least 3 distinct points");
  }

  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {  // lower chain
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {  // upper chain
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);  // last point repeats the first
  if (hull.size() < 3) {
    throw DegenerateInputError("convex hull input is collinear");
  }
  return Polygon{std::move(hull)};
}

double signed_area(const Polygon& poly) {
  const auto& v = poly.vertices;
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % v.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return acc / 2.0;
}

bool is_convex(const Polygon& poly) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n < 3) return false;
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(v[i], v[(i + 1) % n], v[(i + 2) % n]);
    pos = pos || c > 0.0;
    neg = neg || c < 0.0;
  }
  // Turning in one direction is not enough for self-intersecting stars, so
  // also require a single winding.
  if (pos && neg) return false;
  double turn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = v[i], b = v[(i + 1) % n], c = v[(i + 2) % n];
    turn += std::atan2(cross(a, b, c), (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y));
  }
  return std::abs(std::abs(turn) - 2.0 * M_PI) < 1e-6;
}

bool contains(const Polygon& poly, Point2 p) {
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  if (n == 0) return false;
  if (n == 1) return v[0] == p;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (on_segment(v[j], v[i], p)) return true;
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

SliceMask rasterize(const Polygon& poly, int width, int height) {
  SliceMask mask(width, height);
  if (poly.vertices.empty()) return mask;
  if (is_convex(poly) && signed_area(poly) != 0.0) {
    std::vector<Point2> v = poly.vertices;
    if (signed_area(poly) < 0.0) std::reverse(v.begin(), v.end());
    fill_convex(v, mask);
  } else {
    fill_general(poly, mask);
  }
  return mask;
}

double dsc(const SliceMask& a, const SliceMask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ValidationError("DSC of masks with different dimensions");
  }
  std::size_t na = 0, nb = 0, both = 0;
  const auto ba = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    na += ba[i];
    nb += bb[i];
    both += ba[i] & bb[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::optional<Point2> centroid(const SliceMask& mask) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++n;
      }
    }
  }
  if (n == 0) return std::nullopt;
  return Point2{sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

}  // namespace slicetrack
