#include "fraclab/projections.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fraclab/error.hpp"
#include "fraclab/random.hpp"

namespace fraclab {

namespace {

constexpr std::uint64_t kPlaneStream = 0x706c616e6573ULL;   // "planes"
constexpr std::uint64_t kShiftStream = 0x7368696674ULL;     // "shift"
constexpr std::uint64_t kResampleStream = 0x726573616dULL;  // "resam"
constexpr std::uint64_t kRotationStream = 0x726f74ULL;      // "rot"

double min_spacing(const GridMeasure& mu) {
  return *std::min_element(mu.spacing().begin(), mu.spacing().end());
}

double max_spacing(const GridMeasure& mu) {
  return *std::max_element(mu.spacing().begin(), mu.spacing().end());
}

Estimate summarize(std::vector<double> samples) {
  Estimate e;
  const auto n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double v : samples) sum += v;
  e.value = sum / n;
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - e.value) * (v - e.value);
    e.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  e.samples = std::move(samples);
  return e;
}

// Advances a row-major multi-index by one.
void step_index(std::array<std::size_t, kMaxDim>& idx, const std::vector<std::size_t>& shape) {
  for (std::size_t a = shape.size(); a-- > 0;) {
    if (++idx[a] < shape[a]) return;
    idx[a] = 0;
  }
}

std::vector<AffinePlane> equispaced_lines(std::size_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kShiftStream));
  const double shift = rng.uniform();
  std::vector<AffinePlane> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(line_at_angle(std::numbers::pi * (static_cast<double>(i) + shift) / static_cast<double>(count)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Mollifier

double MollifierSpec::value(double dist, int d) const {
  const double w = width();
  const double top = std::pow(w, -d);
  if (dist <= 3.0 * w) return top;
  if (dist >= 4.0 * w) return 0.0;
  return top * (4.0 * w - dist) / w;
}

double MollifierSpec::mass(int d) const {
  // Scale free: sphere area times the radial integral in units of C delta.
  const double dd = d;
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * dd) / std::tgamma(0.5 * dd);
  const double plateau = std::pow(3.0, dd) / dd;
  const double ramp = 4.0 * (std::pow(4.0, dd) - std::pow(3.0, dd)) / dd -
                      (std::pow(4.0, dd + 1.0) - std::pow(3.0, dd + 1.0)) / (dd + 1.0);
  return sphere * (plateau + ramp);
}

double MollifierSpec::lipschitz(int d) const { return std::pow(width(), -d - 1); }

GridMeasure mollify_point_cloud(const PointCloud& points, const MollifierSpec& spec, double h) {
  require(!points.empty(), "cannot mollify an empty point cloud");
  require(spec.C >= 1.0 && spec.delta > 0.0, "mollifier needs C >= 1 and delta > 0");
  require(h > 0.0 && h <= spec.width() / 4.0 * (1.0 + 1e-12), "lattice spacing must be at most C delta / 4");
  const int d = points.dim();
  const double reach = 4.0 * spec.width();
  std::vector<double> origin(d);
  std::vector<std::size_t> shape(d);
  for (int a = 0; a < d; ++a) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < points.size(); ++i) {
      lo = std::min(lo, points.point(i)[a]);
      hi = std::max(hi, points.point(i)[a]);
    }
    origin[a] = (std::floor((lo - reach) / h) - 1.0) * h;
    shape[a] = static_cast<std::size_t>(std::ceil((hi + reach - origin[a]) / h)) + 2;
  }
  GridMeasure mu = GridMeasure::zeros(h, origin, shape);
  auto& vals = mu.mutable_values();
  const double inv_count = 1.0 / static_cast<double>(points.size());
  std::array<std::size_t, kMaxDim> lo{}, hi{}, idx{};
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points.point(i);
    for (int a = 0; a < d; ++a) {
      lo[a] = static_cast<std::size_t>(std::max(0.0, std::floor((p[a] - reach - origin[a]) / h)));
      hi[a] = std::min(shape[a] - 1, static_cast<std::size_t>(std::ceil((p[a] + reach - origin[a]) / h)));
      idx[a] = lo[a];
    }
    for (;;) {
      double s = 0.0;
      std::size_t l = 0;
      for (int a = 0; a < d; ++a) {
        const double diff = origin[a] + static_cast<double>(idx[a]) * h - p[a];
        s += diff * diff;
        l = l * shape[a] + idx[a];
      }
      const double v = spec.value(std::sqrt(s), d);
      if (v > 0.0) vals[l] += v * inv_count;
      int a = d - 1;
      while (a >= 0 && idx[a] == hi[a]) {
        idx[a] = lo[a];
        --a;
      }
      if (a < 0) break;
      ++idx[a];
    }
  }
  return mu;
}

// ---------------------------------------------------------------------------
// Projection

ProjectedDensity project_measure(const GridMeasure& mu, const AffinePlane& subspace, double target_h) {
  require(subspace.is_linear(), "projection target must be a linear subspace");
  require(subspace.ambient_dim() == mu.dim(), "subspace and measure differ in dimension");
  const int d = mu.dim();
  const int n = subspace.plane_dim();
  const double ht = target_h > 0.0 ? target_h : min_spacing(mu);
  const Mat& B = subspace.basis();

  // Target box from the projected corners of the lattice box.
  const auto lower = mu.lower();
  const auto upper = mu.upper();
  std::vector<double> umin(n, std::numeric_limits<double>::infinity());
  std::vector<double> umax(n, -std::numeric_limits<double>::infinity());
  for (unsigned c = 0; c < (1u << d); ++c)
    for (int k = 0; k < n; ++k) {
      double u = 0.0;
      for (int a = 0; a < d; ++a) u += B(a, k) * (((c >> a) & 1u) ? upper[a] : lower[a]);
      umin[k] = std::min(umin[k], u);
      umax[k] = std::max(umax[k], u);
    }
  std::vector<double> origin(n);
  std::vector<std::size_t> shape(n);
  std::vector<std::size_t> stride(n, 1);
  for (int k = 0; k < n; ++k) {
    origin[k] = umin[k] - ht;
    shape[k] = static_cast<std::size_t>(std::ceil((umax[k] - umin[k]) / ht)) + 3;
  }
  for (int k = n - 1; k-- > 0;) stride[k] = stride[k + 1] * shape[k + 1];
  GridMeasure out = GridMeasure::zeros(ht, origin, shape);
  auto& tv = out.mutable_values();

  // u(idx) = u0 + sum_a idx_a * step_a.
  std::array<double, kMaxDim> u0{};
  std::array<std::array<double, kMaxDim>, kMaxDim> step{};
  for (int k = 0; k < n; ++k) {
    for (int a = 0; a < d; ++a) {
      u0[k] += B(a, k) * lower[a];
      step[a][k] = B(a, k) * mu.spacing(a);
    }
  }
  const double cell = mu.cell_volume();
  const auto& vals = mu.values();
  std::array<std::size_t, kMaxDim> idx{};
  std::array<std::int64_t, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  const unsigned corners = 1u << n;
  for (std::size_t l = 0; l < vals.size(); ++l, step_index(idx, mu.shape())) {
    const double v = vals[l];
    if (v == 0.0) continue;
    const double m = v * cell;
    for (int k = 0; k < n; ++k) {
      double u = u0[k];
      for (int a = 0; a < d; ++a) u += static_cast<double>(idx[a]) * step[a][k];
      const double t = (u - origin[k]) / ht;
      const double f = std::floor(t);
      base[k] = static_cast<std::int64_t>(f);
      frac[k] = t - f;
    }
    for (unsigned c = 0; c < corners; ++c) {
      double w = m;
      std::size_t lin = 0;
      for (int k = 0; k < n; ++k) {
        const bool up = (c >> k) & 1u;
        w *= up ? frac[k] : 1.0 - frac[k];
        lin += static_cast<std::size_t>(base[k] + (up ? 1 : 0)) * stride[k];
      }
      tv[lin] += w;
    }
  }
  const double inv = 1.0 / out.cell_volume();
  for (double& x : tv) x *= inv;
  return ProjectedDensity{subspace, std::move(out)};
}

double lp_norm_pow(const GridMeasure& f, double p) {
  require(p >= 1.0, "L^p norms need p >= 1");
  double s = 0.0;
  if (p == 1.0) {
    for (double v : f.values()) s += std::abs(v);
  } else if (p == 2.0) {
    for (double v : f.values()) s += v * v;
  } else {
    for (double v : f.values()) s += std::pow(std::abs(v), p);
  }
  return s * f.cell_volume();
}

double lp_norm(const GridMeasure& f, double p) { return std::pow(lp_norm_pow(f, p), 1.0 / p); }

Estimate projection_lp_integral(const GridMeasure& mu, const std::vector<AffinePlane>& planes, double p,
                                double q) {
  require(p >= 1.0, "L^p norms need p >= 1");
  require(!planes.empty(), "need at least one plane");
  if (q <= 0.0) q = p;
  std::vector<double> values(planes.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(planes.size()); ++i) {
    const auto proj = project_measure(mu, planes[static_cast<std::size_t>(i)]);
    const double pp = lp_norm_pow(proj.density, p);
    values[static_cast<std::size_t>(i)] = q == p ? pp : std::pow(pp, q / p);
  }
  return summarize(std::move(values));
}

Estimate projection_lp_integral(const GridMeasure& mu, int n, double p, std::size_t num_planes,
                                std::uint64_t seed, PlaneSampling sampling, double q) {
  require(num_planes >= 2, "need at least two planes");
  const int d = mu.dim();
  require(n > 0 && n < d, "need 0 < n < d");
  std::vector<AffinePlane> planes;
  if (sampling == PlaneSampling::Equispaced) {
    require(d == 2, "equispaced planes are available in the plane only");
    planes = equispaced_lines(num_planes, seed);
  } else {
    planes = sample_grassmannian(d, n, num_planes, derive_seed(seed, kPlaneStream));
  }
  return projection_lp_integral(mu, planes, p, q);
}

std::vector<AffinePlane> lines_in_angle_range(double theta_lo, double theta_hi, std::size_t count) {
  require(count >= 1 && theta_hi >= theta_lo, "bad angle range");
  std::vector<AffinePlane> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(line_at_angle(theta_lo + (theta_hi - theta_lo) * (static_cast<double>(i) + 0.5) /
                                               static_cast<double>(count)));
  return out;
}

// ---------------------------------------------------------------------------
// Radial slices

double radial_slice_density(const GridMeasure& mu, std::span<const double> x, const AffinePlane& subspace,
                            double step) {
  require(subspace.is_linear(), "slice direction must be a linear subspace");
  require(subspace.ambient_dim() == mu.dim() && static_cast<int>(x.size()) == mu.dim(),
          "slice dimensions do not match the measure");
  const int d = mu.dim();
  const int n = subspace.plane_dim();
  if (step <= 0.0) step = min_spacing(mu);
  const auto lower = mu.lower();
  const auto upper = mu.upper();
  const Mat& B = subspace.basis();
  std::array<double, kMaxDim> y{};
  const std::span<const double> ys(y.data(), static_cast<std::size_t>(d));

  if (n == 1) {
    double tlo = -std::numeric_limits<double>::infinity(), thi = -tlo;
    for (int a = 0; a < d; ++a) {
      const double lo = lower[a] - mu.spacing(a), hi = upper[a] + mu.spacing(a);
      const double b = B(a, 0);
      if (std::abs(b) < 1e-15) {
        if (x[a] < lo || x[a] > hi) return 0.0;
        continue;
      }
      double t0 = (lo - x[a]) / b, t1 = (hi - x[a]) / b;
      if (t0 > t1) std::swap(t0, t1);
      tlo = std::max(tlo, t0);
      thi = std::min(thi, t1);
    }
    if (tlo > thi) return 0.0;
    const auto j0 = static_cast<std::int64_t>(std::ceil(tlo / step));
    const auto j1 = static_cast<std::int64_t>(std::floor(thi / step));
    double sum = 0.0;
    for (std::int64_t j = j0; j <= j1; ++j) {
      const double t = static_cast<double>(j) * step;
      for (int a = 0; a < d; ++a) y[a] = x[a] + t * B(a, 0);
      sum += mu.interpolate(ys);
    }
    return sum * step;
  }

  double R2 = 0.0;
  for (unsigned c = 0; c < (1u << d); ++c) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      const double corner = ((c >> a) & 1u) ? upper[a] + mu.spacing(a) : lower[a] - mu.spacing(a);
      s += (corner - x[a]) * (corner - x[a]);
    }
    R2 = std::max(R2, s);
  }
  const auto J = static_cast<std::int64_t>(std::ceil(std::sqrt(R2) / step));
  std::array<std::int64_t, kMaxDim> j{};
  for (int k = 0; k < n; ++k) j[k] = -J;
  double sum = 0.0;
  for (;;) {
    for (int a = 0; a < d; ++a) {
      double v = x[a];
      for (int k = 0; k < n; ++k) v += static_cast<double>(j[k]) * step * B(a, k);
      y[a] = v;
    }
    sum += mu.interpolate(ys);
    int k = n - 1;
    while (k >= 0 && j[k] == J) {
      j[k] = -J;
      --k;
    }
    if (k < 0) break;
    ++j[k];
  }
  return sum * std::pow(step, n);
}

RadialIdentityResult radial_identity_check(const GridMeasure& mu, int n, double q, std::size_t samples,
                                           std::uint64_t seed, std::size_t num_planes) {
  const int d = mu.dim();
  require(n > 0 && n < d, "need 0 < n < d");
  require(q >= 1.0, "need q >= 1");
  require(samples >= 2 && num_planes >= 2, "need at least two samples and two planes");

  std::vector<AffinePlane> planes = d == 2 ? equispaced_lines(num_planes, seed)
                                           : sample_grassmannian(d, n, num_planes, derive_seed(seed, kPlaneStream));
  std::vector<GridMeasure> pushed(num_planes);
  std::vector<Mat> perp_basis(num_planes);
  std::vector<double> rhs_values(num_planes);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(num_planes); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const AffinePlane perp = orthocomplement(planes[ju]);
    auto proj = project_measure(mu, perp);
    rhs_values[ju] = lp_norm_pow(proj.density, q + 1.0);
    perp_basis[ju] = perp.basis();
    pushed[ju] = std::move(proj.density);
  }

  // Systematic resampling of node masses, then a seeded shuffle so that the
  // plane cycle i mod K does not align with the lattice order.
  const double cell = mu.cell_volume();
  const auto& vals = mu.values();
  const double total = mu.total_mass();
  require(total > 0.0, "measure has zero mass");
  Rng rng(derive_seed(seed, kResampleStream));
  const double u0 = rng.uniform();
  std::vector<std::size_t> nodes(samples);
  {
    double cum = 0.0;
    std::size_t l = 0;
    for (std::size_t i = 0; i < samples; ++i) {
      const double target = (static_cast<double>(i) + u0) * total / static_cast<double>(samples);
      while (l + 1 < vals.size() && cum + vals[l] * cell <= target) {
        cum += vals[l] * cell;
        ++l;
      }
      while (vals[l] == 0.0 && l + 1 < vals.size()) ++l;
      nodes[i] = l;
    }
  }
  for (std::size_t i = samples; i-- > 1;) std::swap(nodes[i], nodes[rng.below(i + 1)]);

  std::vector<double> lhs_values(samples), gap_values(samples), abs_gap_values(samples);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const std::size_t j = iu % num_planes;
    std::array<double, kMaxDim> x{};
    mu.node(nodes[iu], {x.data(), static_cast<std::size_t>(d)});
    const double slice = radial_slice_density(mu, {x.data(), static_cast<std::size_t>(d)}, planes[j]);
    std::array<double, kMaxDim> u{};
    const Mat& P = perp_basis[j];
    for (int k = 0; k < d - n; ++k) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += P(a, k) * x[a];
      u[k] = s;
    }
    const double pushed_value = pushed[j].interpolate({u.data(), static_cast<std::size_t>(d - n)});
    const double a = std::pow(slice, q), b = std::pow(pushed_value, q);
    lhs_values[iu] = total * a;
    gap_values[iu] = total * (a - b);
    abs_gap_values[iu] = total * std::abs(a - b);
  }

  RadialIdentityResult res;
  res.samples = samples;
  res.planes = num_planes;
  const Estimate lhs = summarize(std::move(lhs_values));
  const Estimate rhs = summarize(std::move(rhs_values));
  const Estimate gap = summarize(std::move(gap_values));
  const Estimate abs_gap = summarize(std::move(abs_gap_values));
  res.lhs = lhs.value;
  res.lhs_std_error = lhs.std_error;
  res.rhs = rhs.value;
  res.rhs_std_error = rhs.std_error;
  res.relative_error = std::abs(res.lhs - res.rhs) / res.rhs;
  res.paired_gap = gap.value / res.rhs;
  res.paired_std_error = gap.std_error / res.rhs;
  res.pointwise_gap = abs_gap.value / res.rhs;
  res.pointwise_std_error = abs_gap.std_error / res.rhs;
  return res;
}

// ---------------------------------------------------------------------------
// Rotation identity

MattilaResult mattila_identity_check(const ScalarField& f, int d, int n, std::size_t rotations,
                                     std::uint64_t seed, double R, double h) {
  require(d >= 2 && d <= 4 && n > 0 && n < d, "need 0 < n < d <= 4");
  require(rotations >= 1 && R > 0.0 && h > 0.0, "bad quadrature parameters");
  const auto m = static_cast<std::int64_t>(std::llround(2.0 * R / h));
  require(m >= 2, "quadrature step too coarse");
  const double step = 2.0 * R / static_cast<double>(m);

  auto lattice_sum = [&](int dim, auto&& body) {
    std::array<std::int64_t, kMaxDim> j{};
    std::array<double, kMaxDim> x{};
    double sum = 0.0;
    for (;;) {
      for (int a = 0; a < dim; ++a) x[a] = -R + (static_cast<double>(j[a]) + 0.5) * step;
      sum += body(std::span<const double>(x.data(), static_cast<std::size_t>(dim)));
      int a = dim - 1;
      while (a >= 0 && j[a] == m - 1) {
        j[a] = 0;
        --a;
      }
      if (a < 0) break;
      ++j[a];
    }
    return sum * std::pow(step, dim);
  };

  MattilaResult res;
  res.rotations = rotations;
  res.rhs = lattice_sum(d, [&](std::span<const double> x) { return f(x); });

  // Rotation matrices: equispaced in d = 2, Haar (QR of a Gaussian matrix
  // with sign-corrected diagonal) otherwise.
  std::vector<Mat> rots(rotations);
  Rng shift_rng(derive_seed(seed, kShiftStream));
  const double shift = shift_rng.uniform();
  for (std::size_t i = 0; i < rotations; ++i) {
    if (d == 2) {
      const double th = 2.0 * std::numbers::pi * (static_cast<double>(i) + shift) / static_cast<double>(rotations);
      Mat g(2, 2);
      g << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
      rots[i] = g;
    } else {
      Rng rng(derive_seed(seed, kRotationStream, i));
      Mat a(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
      const Eigen::HouseholderQR<Mat> qr(a);
      Mat qm = qr.householderQ() * Mat::Identity(d, d);
      const Mat rm = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int c = 0; c < d; ++c)
        if (rm(c, c) < 0.0) qm.col(c) = -qm.col(c);
      rots[i] = qm;
    }
  }
  std::vector<double> per_rotation(rotations);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(rotations); ++i) {
    const Mat& g = rots[static_cast<std::size_t>(i)];
    per_rotation[static_cast<std::size_t>(i)] = lattice_sum(n, [&](std::span<const double> x) {
      std::array<double, kMaxDim> y{};
      double norm2 = 0.0;
      for (int k = 0; k < n; ++k) norm2 += x[k] * x[k];
      for (int a = 0; a < d; ++a) {
        double v = 0.0;
        for (int k = 0; k < n; ++k) v += g(a, k) * x[k];
        y[a] = v;
      }
      return std::pow(norm2, 0.5 * (d - n)) * f(std::span<const double>(y.data(), static_cast<std::size_t>(d)));
    });
  }
  double sum = 0.0;
  for (double v : per_rotation) sum += v;
  res.lhs = sum / static_cast<double>(rotations);
  res.ratio = std::abs(res.rhs) > 1e-300 ? res.lhs / res.rhs : std::numeric_limits<double>::quiet_NaN();
  return res;
}

// ---------------------------------------------------------------------------
// Ball masses

BallSummer::BallSummer(const GridMeasure& mu) : mu_(&mu) {
  const int d = mu.dim();
  last_ = mu.shape()[d - 1];
  const std::size_t rows = mu.size() / last_;
  const double cell = mu.cell_volume();
  prefix_.assign(rows * (last_ + 1), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* pre = prefix_.data() + r * (last_ + 1);
    const double* v = mu.values().data() + r * last_;
    for (std::size_t i = 0; i < last_; ++i) pre[i + 1] = pre[i] + v[i] * cell;
  }
}

double BallSummer::row_sum(std::size_t row, std::int64_t lo, std::int64_t hi) const {
  const double* pre = prefix_.data() + row * (last_ + 1);
  return pre[hi + 1] - pre[lo];
}

void BallSummer::accumulate(int axis, std::size_t row, double dist2, std::span<const double> c, double r,
                            double& total) const {
  const GridMeasure& mu = *mu_;
  const int d = mu.dim();
  const double rem2 = r * r - dist2;
  if (rem2 < 0.0) return;
  const double reach = std::sqrt(rem2);
  const double h = mu.spacing(axis);
  const double o = mu.origin()[axis];
  const auto n = static_cast<std::int64_t>(mu.shape()[axis]);
  const std::int64_t lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil((c[axis] - reach - o) / h - 1e-9)));
  const std::int64_t hi = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor((c[axis] + reach - o) / h + 1e-9)));
  if (lo > hi) return;
  if (axis == d - 1) {
    total += row_sum(row, lo, hi);
    return;
  }
  for (std::int64_t i = lo; i <= hi; ++i) {
    const double dx = o + static_cast<double>(i) * h - c[axis];
    accumulate(axis + 1, row * mu.shape()[axis] + static_cast<std::size_t>(i), dist2 + dx * dx, c, r, total);
  }
}

double BallSummer::mass(std::span<const double> centre, double r) const {
  double total = 0.0;
  accumulate(0, 0, 0.0, centre, r, total);
  return std::max(0.0, total);
}

BallScaling ball_integral_scaling(const GridMeasure& mu, double p, double s, std::span<const double> deltas) {
  require(deltas.size() >= 3, "ball scaling needs at least three scales");
  require(p >= 1.0, "need p >= 1");
  const int d = mu.dim();
  const double hmax = max_spacing(mu);
  for (double delta : deltas) require(delta >= 4.0 * hmax * (1.0 - 1e-12), "each delta must be at least 4h");
  const BallSummer summer(mu);
  BallScaling out;
  out.deltas.assign(deltas.begin(), deltas.end());
  out.expected_slope = d - s + p * s;
  for (double delta : deltas) {
    std::array<std::int64_t, kMaxDim> first{}, count{}, stride{};
    double weight = 1.0;
    std::int64_t total = 1;
    for (int a = 0; a < d; ++a) {
      const double h = mu.spacing(a);
      stride[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(delta / (16.0 * h))));
      const auto margin = static_cast<std::int64_t>(std::ceil(delta / h)) + 1;
      first[a] = -margin;
      const std::int64_t span = static_cast<std::int64_t>(mu.shape()[a]) - 1 + 2 * margin;
      count[a] = span / stride[a] + 1;
      weight *= static_cast<double>(stride[a]) * h;
      total *= count[a];
    }
    // One partial sum per evaluation row keeps the reduction order fixed.
    const std::int64_t rowlen = count[d - 1];
    const std::int64_t rows = total / rowlen;
    std::vector<double> partial(static_cast<std::size_t>(rows), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t row = 0; row < rows; ++row) {
      std::array<double, kMaxDim> x{};
      std::int64_t rem = row;
      for (int a = d - 2; a >= 0; --a) {
        const std::int64_t i = rem % count[a];
        rem /= count[a];
        x[a] = mu.origin()[a] + static_cast<double>(first[a] + i * stride[a]) * mu.spacing(a);
      }
      double acc = 0.0;
      for (std::int64_t i = 0; i < rowlen; ++i) {
        x[d - 1] = mu.origin()[d - 1] + static_cast<double>(first[d - 1] + i * stride[d - 1]) * mu.spacing(d - 1);
        const double m = summer.mass({x.data(), static_cast<std::size_t>(d)}, delta);
        if (m > 0.0) acc += p == 2.0 ? m * m : std::pow(m, p);
      }
      partial[static_cast<std::size_t>(row)] = acc;
    }
    double sum = 0.0;
    for (double v : partial) sum += v;
    out.integrals.push_back(sum * weight);
  }
  out.fit = fit_loglog_slope(out.deltas, out.integrals);
  return out;
}

double max_ball_mass_ratio(const GridMeasure& mu, double t, std::span<const double> radii) {
  const int d = mu.dim();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
  std::array<double, kMaxDim> x{};
  for (std::size_t l = 0; l < mu.size(); ++l) {
    if (mu.values()[l] == 0.0) continue;
    mu.node(l, {x.data(), static_cast<std::size_t>(d)});
    for (int a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], x[a]);
      hi[a] = std::max(hi[a], x[a]);
    }
  }
  require(std::isfinite(lo[0]), "measure has empty support");
  const BallSummer summer(mu);
  double best = 0.0;
  for (double r : radii) {
    require(r > 0.0, "radii must be positive");
    const double step = 0.5 * r;
    std::array<std::int64_t, kMaxDim> count{};
    std::int64_t total = 1;
    for (int a = 0; a < d; ++a) {
      count[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo[a]) / step)) + 2;
      total *= count[a];
    }
    const double scale = std::pow(r, -t);
    for (std::int64_t c = 0; c < total; ++c) {
      std::int64_t rem = c;
      for (int a = d - 1; a >= 0; --a) {
        x[a] = lo[a] + static_cast<double>(rem % count[a]) * step;
        rem /= count[a];
      }
      best = std::max(best, summer.mass({x.data(), static_cast<std::size_t>(d)}, r) * scale);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Riesz energy

namespace {

// E|X - Y|^-alpha for X, Y independent uniform on the unit square, from the
// density (1-|u|)(1-|v|) of X - Y in polar form (Simpson's rule in angle).
double unit_square_self_energy(double alpha) {
  auto inner = [alpha](double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    const double R = 1.0 / c;
    return std::pow(R, 2.0 - alpha) / (2.0 - alpha) - (c + s) * std::pow(R, 3.0 - alpha) / (3.0 - alpha) +
           c * s * std::pow(R, 4.0 - alpha) / (4.0 - alpha);
  };
  constexpr int kIntervals = 2000;
  const double a = 0.0, b = 0.25 * std::numbers::pi;
  const double hstep = (b - a) / kIntervals;
  double sum = inner(a) + inner(b);
  for (int i = 1; i < kIntervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * inner(a + i * hstep);
  return 8.0 * sum * hstep / 3.0;
}

}  // namespace

double riesz_energy(const GridMeasure& mu, double alpha) {
  require(mu.dim() == 2, "riesz_energy supports planar measures");
  require(alpha > 0.0 && alpha < 2.0, "need 0 < alpha < 2");
  const double h = mu.h();
  std::vector<double> xs, ys, ms;
  std::array<double, 2> x{};
  for (std::size_t l = 0; l < mu.size(); ++l) {
    const double v = mu.values()[l];
    if (v == 0.0) continue;
    mu.node(l, x);
    xs.push_back(x[0]);
    ys.push_back(x[1]);
    ms.push_back(v * mu.cell_volume());
  }
  const std::size_t n = ms.size();
  const double self = unit_square_self_energy(alpha) * std::pow(h, -alpha);
  std::vector<double> rows(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto iu = static_cast<std::size_t>(i);
    double acc = 0.0;
    for (std::size_t j = iu + 1; j < n; ++j) {
      const double dx = xs[iu] - xs[j], dy = ys[iu] - ys[j];
      const double r2 = dx * dx + dy * dy;
      acc += ms[j] * (alpha == 1.0 ? 1.0 / std::sqrt(r2) : std::pow(r2, -0.5 * alpha));
    }
    rows[iu] = ms[iu] * (2.0 * acc + ms[iu] * self);
  }
  double sum = 0.0;
  for (double v : rows) sum += v;
  return sum;
}

}  // namespace fraclab
