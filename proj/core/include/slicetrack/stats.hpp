#pragma once

#include <span>

namespace slicetrack::stats {

double mean(std::span<const double> values);
/// Population standard deviation (divides by n).
double population_std(std::span<const double> values);
/// Quantile with linear interpolation between order statistics at
/// position (n - 1) * q. Throws ValidationError for empty input or q outside [0, 1].
double quantile(std::span<const double> values, double q);

}  // namespace slicetrack::stats
