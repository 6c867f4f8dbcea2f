#include "fraclab/grid_measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fraclab/error.hpp"

namespace fraclab {

GridMeasure::GridMeasure(std::vector<double> spacing, std::vector<double> origin,
                         std::vector<std::size_t> shape, std::vector<double> values)
    : spacing_(std::move(spacing)),
      origin_(std::move(origin)),
      shape_(std::move(shape)),
      values_(std::move(values)) {
  const auto d = shape_.size();
  require(d >= 1 && d <= static_cast<std::size_t>(kMaxDim), "grid dimension must be in [1, 8]");
  require(spacing_.size() == d && origin_.size() == d, "spacing/origin/shape dimensions differ");
  for (double h : spacing_) require(h > 0.0 && std::isfinite(h), "grid spacing must be positive");
  std::size_t total = 1;
  for (auto s : shape_) {
    require(s >= 1, "grid shape entries must be positive");
    total *= s;
  }
  require(values_.size() == total, "value count does not match the grid shape");
  for (double v : values_) require(v >= 0.0 && std::isfinite(v), "grid values must be finite and non-negative");
  strides_.assign(d, 1);
  for (std::size_t a = d - 1; a-- > 0;) strides_[a] = strides_[a + 1] * shape_[a + 1];
}

GridMeasure GridMeasure::zeros(double h, std::vector<double> origin, std::vector<std::size_t> shape) {
  std::size_t total = 1;
  for (auto s : shape) total *= s;
  std::vector<double> spacing(shape.size(), h);
  return GridMeasure(std::move(spacing), std::move(origin), std::move(shape),
                     std::vector<double>(total, 0.0));
}

bool GridMeasure::isotropic() const {
  return std::all_of(spacing_.begin(), spacing_.end(),
                     [&](double h) { return h == spacing_.front(); });
}

double GridMeasure::h() const {
  require(isotropic(), "grid spacing is anisotropic");
  return spacing_.front();
}

double GridMeasure::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

double GridMeasure::total_mass() const {
  // Pairwise-free but fixed order: the result depends only on the values.
  double s = 0.0;
  for (double v : values_) s += v;
  return s * cell_volume();
}

void GridMeasure::normalize(double target) {
  const double m = total_mass();
  require(m > 0.0, "cannot normalise a zero measure");
  const double f = target / m;
  for (double& v : values_) v *= f;
}

std::size_t GridMeasure::linear(std::span<const std::size_t> idx) const {
  std::size_t l = 0;
  for (std::size_t a = 0; a < shape_.size(); ++a) l += idx[a] * strides_[a];
  return l;
}

void GridMeasure::unravel(std::size_t linear, std::span<std::size_t> idx) const {
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    idx[a] = linear / strides_[a];
    linear -= idx[a] * strides_[a];
  }
}

void GridMeasure::node(std::size_t linear, std::span<double> x) const {
  for (std::size_t a = 0; a < shape_.size(); ++a) {
    const std::size_t i = linear / strides_[a];
    linear -= i * strides_[a];
    x[a] = origin_[a] + static_cast<double>(i) * spacing_[a];
  }
}

std::vector<double> GridMeasure::upper() const {
  std::vector<double> up(origin_);
  for (std::size_t a = 0; a < up.size(); ++a)
    up[a] += static_cast<double>(shape_[a] - 1) * spacing_[a];
  return up;
}

double GridMeasure::interpolate(std::span<const double> x) const {
  const int d = dim();
  std::array<std::int64_t, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (int a = 0; a < d; ++a) {
    const double u = (x[a] - origin_[a]) / spacing_[a];
    const double f = std::floor(u);
    if (f < -1.0 || f > static_cast<double>(shape_[a] - 1)) return 0.0;
    base[a] = static_cast<std::int64_t>(f);
    frac[a] = u - f;
  }
  double result = 0.0;
  const unsigned corners = 1u << d;
  for (unsigned c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t l = 0;
    bool inside = true;
    for (int a = 0; a < d; ++a) {
      const bool up = (c >> a) & 1u;
      const std::int64_t i = base[a] + (up ? 1 : 0);
      if (i < 0 || i >= static_cast<std::int64_t>(shape_[a])) {
        inside = false;
        break;
      }
      w *= up ? frac[a] : 1.0 - frac[a];
      l += static_cast<std::size_t>(i) * strides_[a];
    }
    if (inside && w != 0.0) result += w * values_[l];
  }
  return result;
}

GridMeasure make_uniform_box(std::span<const double> lo, std::span<const double> hi, double h) {
  require(lo.size() == hi.size() && !lo.empty(), "box corners differ in dimension");
  require(h > 0.0, "spacing must be positive");
  const std::size_t d = lo.size();
  std::vector<double> origin(d);
  std::vector<std::size_t> shape(d);
  double volume = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    require(hi[a] > lo[a], "box must have positive extent");
    const double cells = std::round((hi[a] - lo[a]) / h);
    require(std::abs(cells * h - (hi[a] - lo[a])) <= 1e-9 * (hi[a] - lo[a]),
            "box extent must be a multiple of the spacing");
    shape[a] = static_cast<std::size_t>(cells);
    origin[a] = lo[a] + 0.5 * h;
    volume *= hi[a] - lo[a];
  }
  std::size_t total = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                      std::multiplies<>());
  return GridMeasure(std::vector<double>(d, h), std::move(origin), std::move(shape),
                     std::vector<double>(total, 1.0 / volume));
}

GridMeasure make_uniform_ball(int d, double radius, double h, int supersample) {
  require(d >= 1 && d <= kMaxDim, "dimension must be in [1, 8]");
  require(radius > 0.0 && h > 0.0 && supersample >= 1, "radius, spacing, supersample must be positive");
  const auto half = static_cast<std::size_t>(std::ceil(radius / h)) + 1;
  const std::size_t side = 2 * half + 1;
  std::vector<double> origin(d, -static_cast<double>(half) * h);
  std::vector<std::size_t> shape(d, side);
  GridMeasure g = GridMeasure::zeros(h, origin, shape);
  auto& vals = g.mutable_values();
  std::array<double, kMaxDim> x{};
  std::array<std::size_t, kMaxDim> idx{};
  const double r2 = radius * radius;
  const double sub = h / supersample;
  std::size_t subsamples = 1;
  for (int a = 0; a < d; ++a) subsamples *= static_cast<std::size_t>(supersample);
  for (std::size_t l = 0; l < g.size(); ++l) {
    g.node(l, {x.data(), static_cast<std::size_t>(d)});
    // Quick classification by the cell's nearest and farthest corners.
    double near = 0.0, far = 0.0;
    for (int a = 0; a < d; ++a) {
      const double lo = std::abs(x[a]) - 0.5 * h;
      near += lo > 0 ? lo * lo : 0.0;
      const double hi = std::abs(x[a]) + 0.5 * h;
      far += hi * hi;
    }
    if (near > r2) continue;
    if (far <= r2) {
      vals[l] = 1.0;
      continue;
    }
    std::size_t hits = 0;
    for (std::size_t s = 0; s < subsamples; ++s) {
      std::size_t rem = s;
      double q = 0.0;
      for (int a = 0; a < d; ++a) {
        idx[a] = rem % static_cast<std::size_t>(supersample);
        rem /= static_cast<std::size_t>(supersample);
        const double c = x[a] - 0.5 * h + (static_cast<double>(idx[a]) + 0.5) * sub;
        q += c * c;
      }
      if (q <= r2) ++hits;
    }
    vals[l] = static_cast<double>(hits) / static_cast<double>(subsamples);
  }
  g.normalize(1.0);
  return g;
}

}  // namespace fraclab
