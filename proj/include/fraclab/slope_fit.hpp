#pragma once

#include <span>
#include <vector>

namespace fraclab {

/// Least-squares fit of log(value) = intercept + slope * log(scale).
/// A positive slope means the value decays as the scale shrinks.
struct SlopeFit {
  std::vector<double> scales;
  std::vector<double> values;
  double slope = 0.0;
  double intercept = 0.0;  // log A in value ~ A * scale^slope
  double r_squared = 1.0;
};

/// Needs at least three points and positive scales and values.
SlopeFit fit_loglog_slope(std::span<const double> scales, std::span<const double> values);

}  // namespace fraclab
