#include "fraclab/slope_fit.hpp"

#include <algorithm>
#include <cmath>

#include "fraclab/error.hpp"

namespace fraclab {

SlopeFit fit_loglog_slope(std::span<const double> scales, std::span<const double> values) {
  require(scales.size() == values.size(), "scale and value counts differ");
  require(scales.size() >= 3, "a slope fit needs at least three points");
  const auto n = static_cast<double>(scales.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    require(scales[i] > 0.0 && std::isfinite(scales[i]), "scales must be positive");
    require(values[i] > 0.0 && std::isfinite(values[i]), "values must be positive");
    mx += std::log(scales[i]);
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double x = std::log(scales[i]) - mx;
    const double y = std::log(values[i]) - my;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  require(sxx > 0.0, "scales must not all be equal");
  SlopeFit fit;
  fit.scales.assign(scales.begin(), scales.end());
  fit.values.assign(values.begin(), values.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = syy - fit.slope * sxy;
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace fraclab
