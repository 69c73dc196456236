#include "slicetrack/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "slicetrack/error.hpp"

namespace slicetrack::stats {

double mean(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean of empty sequence");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of empty sequence");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile level outside [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace slicetrack::stats
