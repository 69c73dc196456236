#include "slicetrack/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "slicetrack/error.hpp"

namespace slicetrack {
namespace {

GraySlice downsample(const GraySlice& src) {
  const int w = src.width() / 2;
  const int h = src.height() / 2;
  std::vector<double> out(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out[static_cast<std::size_t>(y) * w + x] =
          (src.at(2 * x, 2 * y) + src.at(2 * x + 1, 2 * y) + src.at(2 * x, 2 * y + 1) +
           src.at(2 * x + 1, 2 * y + 1)) /
          4.0;
    }
  }
  // Averages of [0, 1] values can exceed 1 by an ulp; clamp before validation.
  for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
  return GraySlice(w, h, std::move(out));
}

void gradients(const GraySlice& img, Grid& gx, Grid& gy) {
  const int w = img.width();
  const int h = img.height();
  gx = Grid(w, h);
  gy = Grid(w, h);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      gx.at(x, y) = (img.at(xp, y) - img.at(xm, y)) / 2.0;
      gy.at(x, y) = (img.at(x, yp) - img.at(x, ym)) / 2.0;
    }
  }
}

// Bilinear read with coordinates clamped to the image.
template <typename Image>
double sample(const Image& img, int w, int h, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

bool window_inside(Point2 c, int r, int w, int h) {
  return c.x - r >= 0.0 && c.x + r <= w - 1.0 && c.y - r >= 0.0 && c.y + r <= h - 1.0;
}

struct LkResult {
  Point2 position;
  KeypointStatus status = KeypointStatus::live;
  int iterations = 0;
  double residual = 0.0;
};

LkResult lucas_kanade(const Pyramid& prev, const Pyramid& next, Point2 p,
                      const TrackParams& params) {
  const int r = params.window_radius;
  const int side = params.window_size();
  const auto n = static_cast<std::size_t>(side) * side;

  std::vector<double> win_i(n), win_ix(n), win_iy(n);
  LkResult result{p};
  Point2 guess{0.0, 0.0};

  for (int level = static_cast<int>(prev.size()) - 1; level >= 0; --level) {
    const bool finest = level == 0;
    const GraySlice& img_prev = prev.levels[level];
    const GraySlice& img_next = next.levels[level];
    const Grid& gx = prev.grad_x[level];
    const Grid& gy = prev.grad_y[level];
    const int w = img_prev.width();
    const int h = img_prev.height();
    const double scale = std::ldexp(1.0, level);
    const Point2 pl{(p.x + 0.5) / scale - 0.5, (p.y + 0.5) / scale - 0.5};

    if (finest && !window_inside(pl, r, w, h)) {
      result.status = KeypointStatus::lost_out_of_bounds;
      return result;
    }

    double gxx = 0.0, gxy = 0.0, gyy = 0.0;
    std::size_t k = 0;
    for (int v = -r; v <= r; ++v) {
      for (int u = -r; u <= r; ++u, ++k) {
        const double sx = pl.x + u;
        const double sy = pl.y + v;
        win_i[k] = sample(img_prev, w, h, sx, sy);
        win_ix[k] = sample(gx, w, h, sx, sy);
        win_iy[k] = sample(gy, w, h, sx, sy);
        gxx += win_ix[k] * win_ix[k];
        gxy += win_ix[k] * win_iy[k];
        gyy += win_iy[k] * win_iy[k];
      }
    }

    const double det = gxx * gyy - gxy * gxy;
    const double min_eig =
        0.5 * ((gxx + gyy) - std::sqrt((gxx - gyy) * (gxx - gyy) + 4.0 * gxy * gxy));
    const bool singular = !(det > 1e-20) || !(min_eig > 0.0);
    if (finest && (singular || min_eig / static_cast<double>(n) < params.min_eigenvalue)) {
      result.status = KeypointStatus::lost_untrackable;
      return result;
    }

    Point2 d{0.0, 0.0};
    if (!singular) {
      for (int it = 0; it < params.max_iterations; ++it) {
        const Point2 q{pl.x + guess.x + d.x, pl.y + guess.y + d.y};
        if (finest && !window_inside(q, r, w, h)) {
          result.status = KeypointStatus::lost_out_of_bounds;
          return result;
        }
        double bx = 0.0, by = 0.0;
        k = 0;
        for (int v = -r; v <= r; ++v) {
          for (int u = -r; u <= r; ++u, ++k) {
            const double diff = win_i[k] - sample(img_next, w, h, q.x + u, q.y + v);
            bx += diff * win_ix[k];
            by += diff * win_iy[k];
          }
        }
        const double dx = (gyy * bx - gxy * by) / det;
        const double dy = (gxx * by - gxy * bx) / det;
        d.x += dx;
        d.y += dy;
        ++result.iterations;
        if (std::hypot(dx, dy) < params.convergence_eps) break;
      }
    }

    if (finest) {
      result.position = {p.x + guess.x + d.x, p.y + guess.y + d.y};
    } else {
      guess = {2.0 * (guess.x + d.x), 2.0 * (guess.y + d.y)};
    }
  }

  const GraySlice& img_next = next.levels[0];
  const int w = img_next.width();
  const int h = img_next.height();
  if (!window_inside(result.position, r, w, h)) {
    result.status = KeypointStatus::lost_out_of_bounds;
    return result;
  }
  double abs_err = 0.0;
  std::size_t k = 0;
  for (int v = -r; v <= r; ++v) {
    for (int u = -r; u <= r; ++u, ++k) {
      abs_err += std::abs(win_i[k] - sample(img_next, w, h, result.position.x + u,
                                            result.position.y + v));
    }
  }
  result.residual = abs_err / static_cast<double>(n);
  return result;
}

void check_pyramids(const Pyramid& prev, const Pyramid& next, const TrackParams& params) {
  if (prev.size() == 0 || prev.size() != next.size() ||
      prev.grad_x.size() != prev.size() || prev.grad_y.size() != prev.size() ||
      next.grad_x.size() != next.size() || next.grad_y.size() != next.size()) {
    throw ValidationError("malformed pyramid pair");
  }
  if (static_cast<int>(prev.size()) != params.pyramid_levels) {
    throw ValidationError("pyramid level count does not match pyramid_levels");
  }
  for (std::size_t l = 0; l < prev.size(); ++l) {
    if (prev.levels[l].width() != next.levels[l].width() ||
        prev.levels[l].height() != next.levels[l].height()) {
      throw ValidationError("pyramid level dimensions differ between slices");
    }
  }
}

}  // namespace

Pyramid build_pyramid(const GraySlice& slice, int levels) {
  if (levels < 1) throw ConfigError("pyramid needs at least one level");
  const int shrink = levels - 1;
  if (shrink >= 31 || (slice.width() >> shrink) < 2 || (slice.height() >> shrink) < 2) {
    std::ostringstream msg;
    msg << levels << " pyramid levels are too many for a " << slice.width() << "x"
        << slice.height() << " image";
    throw ConfigError(msg.str());
  }
  Pyramid pyr;
  pyr.levels.reserve(levels);
  pyr.levels.push_back(slice);
  for (int l = 1; l < levels; ++l) pyr.levels.push_back(downsample(pyr.levels.back()));
  pyr.grad_x.resize(levels);
  pyr.grad_y.resize(levels);
  for (int l = 0; l < levels; ++l) gradients(pyr.levels[l], pyr.grad_x[l], pyr.grad_y[l]);
  return pyr;
}

TrackOutcome track_point(const Pyramid& prev, const Pyramid& next, const Keypoint& p,
                         const TrackParams& params) {
  if (!p.live()) return {p, 0, 0.0, std::nullopt};
  params.validate();
  check_pyramids(prev, next, params);
  const GraySlice& base = prev.levels[0];
  if (!(p.x >= 0.0 && p.x < base.width() && p.y >= 0.0 && p.y < base.height())) {
    throw ValidationError("live keypoint lies outside the slice");
  }

  const LkResult fwd = lucas_kanade(prev, next, p.position(), params);
  TrackOutcome out{p, fwd.iterations, fwd.residual, std::nullopt};
  if (fwd.status != KeypointStatus::live) {
    out.point.status = fwd.status;
    return out;
  }
  if (params.fb_error_max) {
    const LkResult back = lucas_kanade(next, prev, fwd.position, params);
    if (back.status != KeypointStatus::live) {
      out.point.status = KeypointStatus::lost_diverged;
      return out;
    }
    const double fb = std::hypot(back.position.x - p.x, back.position.y - p.y);
    out.fb_error = fb;
    if (fb > *params.fb_error_max) {
      out.point.status = KeypointStatus::lost_diverged;
      return out;
    }
  }
  out.point = {fwd.position.x, fwd.position.y, KeypointStatus::live};
  return out;
}

KeypointSet track_set(const Pyramid& prev, const Pyramid& next, const KeypointSet& points,
                      const TrackParams& params, int next_index) {
  KeypointSet out{next_index, {}};
  out.points.reserve(points.points.size());
  for (const auto& p : points.points) {
    out.points.push_back(track_point(prev, next, p, params).point);
  }
  return out;
}

KeypointSet track_set(const GraySlice& prev_slice, const GraySlice& next_slice,
                      const KeypointSet& points, const TrackParams& params, int next_index) {
  if (prev_slice.width() != next_slice.width() || prev_slice.height() != next_slice.height()) {
    throw ValidationError("slices passed to track_set differ in size");
  }
  params.validate_for(prev_slice.width(), prev_slice.height());
  const Pyramid prev = build_pyramid(prev_slice, params.pyramid_levels);
  const Pyramid next = build_pyramid(next_slice, params.pyramid_levels);
  return track_set(prev, next, points, params, next_index);
}

}  // namespace slicetrack
