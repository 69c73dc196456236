#include "slicetrack/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slicetrack/error.hpp"
#include "slicetrack/stats.hpp"

namespace slicetrack {

ThresholdPolicy ThresholdPolicy::absolute(double t) {
  if (!(t >= 0.0)) throw ValidationError("absolute threshold must be >= 0");
  return {Kind::absolute, t};
}

ThresholdPolicy ThresholdPolicy::quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("threshold quantile must be in (0, 1)");
  return {Kind::quantile, q};
}

double ThresholdPolicy::resolve(const MagnitudeMap& map) const {
  if (kind_ == Kind::absolute) return value_;
  return stats::quantile(map.m.values, value_);
}

SubbandSet haar_dwt2(const GraySlice& image, std::optional<Roi> roi) {
  const int w = image.width();
  const int h = image.height();
  if (w < 2 || h < 2) throw SizeError("Haar transform needs at least a 2x2 image");

  const int cw = (w + 1) / 2;
  const int ch = (h + 1) / 2;
  // Replicate the last row/column for odd sizes.
  auto px = [&](int x, int y) { return image.at(std::min(x, w - 1), std::min(y, h - 1)); };

  SubbandSet out{Grid(cw, ch), Grid(cw, ch), Grid(cw, ch), Grid(cw, ch),
                 roi.value_or(Roi{0, 0, w, h})};
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const double p00 = px(2 * x, 2 * y);
      const double p01 = px(2 * x + 1, 2 * y);
      const double p10 = px(2 * x, 2 * y + 1);
      const double p11 = px(2 * x + 1, 2 * y + 1);
      out.a.at(x, y) = (p00 + p01 + p10 + p11) / 2.0;
      out.h.at(x, y) = (p00 + p01 - p10 - p11) / 2.0;
      out.v.at(x, y) = (p00 - p01 + p10 - p11) / 2.0;
      out.d.at(x, y) = (p00 - p01 - p10 + p11) / 2.0;
    }
  }
  return out;
}

Grid haar_idwt2(const SubbandSet& s) {
  const int cw = s.a.width;
  const int ch = s.a.height;
  for (const Grid* g : {&s.h, &s.v, &s.d}) {
    if (g->width != cw || g->height != ch) throw ValidationError("subband size mismatch");
  }
  Grid out(2 * cw, 2 * ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      const double a = s.a.at(x, y);
      const double hh = s.h.at(x, y);
      const double v = s.v.at(x, y);
      const double d = s.d.at(x, y);
      out.at(2 * x, 2 * y) = (a + hh + v + d) / 2.0;
      out.at(2 * x + 1, 2 * y) = (a + hh - v - d) / 2.0;
      out.at(2 * x, 2 * y + 1) = (a - hh + v - d) / 2.0;
      out.at(2 * x + 1, 2 * y + 1) = (a - hh - v + d) / 2.0;
    }
  }
  return out;
}

MagnitudeMap magnitude(const SubbandSet& s) {
  MagnitudeMap out{Grid(s.h.width, s.h.height), s.roi};
  for (std::size_t i = 0; i < out.m.values.size(); ++i) {
    out.m.values[i] = std::abs(s.h.values[i]) + std::abs(s.v.values[i]) + std::abs(s.d.values[i]);
  }
  return out;
}

KeypointSet detect_keypoints(const MagnitudeMap& map, const DetectParams& params,
                             int slice_index) {
  if (map.m.values.empty()) throw ValidationError("magnitude map is empty");
  if (!(params.min_spacing >= 0.0)) throw ValidationError("min_spacing must be >= 0");

  const double t = params.threshold.resolve(map);

  // Candidate cell indices in scan order; stable sort keeps scan order among ties.
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < map.m.values.size(); ++i) {
    if (map.m.values[i] > t) candidates.push_back(i);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t l, std::size_t r) {
    return map.m.values[l] > map.m.values[r];
  });

  KeypointSet out{slice_index, {}};
  const double min_d2 = params.min_spacing * params.min_spacing;
  const std::size_t cap = params.max_keypoints.value_or(candidates.size());
  for (std::size_t idx : candidates) {
    if (out.points.size() >= cap) break;
    const int cx = static_cast<int>(idx % static_cast<std::size_t>(map.m.width));
    const int cy = static_cast<int>(idx / static_cast<std::size_t>(map.m.width));
    const double x = map.roi.x0 + 2.0 * cx + 0.5;
    const double y = map.roi.y0 + 2.0 * cy + 0.5;
    const bool too_close = std::any_of(out.points.begin(), out.points.end(), [&](const Keypoint& k) {
      const double dx = k.x - x;
      const double dy = k.y - y;
      return dx * dx + dy * dy < min_d2;
    });
    if (!too_close) out.points.push_back({x, y, KeypointStatus::live});
  }
  return out;
}

}  // namespace slicetrack
