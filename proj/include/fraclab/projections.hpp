#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fraclab/geometry.hpp"
#include "fraclab/grid_measure.hpp"
#include "fraclab/slope_fit.hpp"

namespace fraclab {

/// Radial bump of height (C delta)^-d on B(3 C delta), decreasing linearly to
/// zero on [3 C delta, 4 C delta].
struct MollifierSpec {
  double C = 1.0;
  double delta = 0.0;

  double width() const { return C * delta; }
  double value(double dist, int d) const;
  /// Integral of the profile over R^d.
  double mass(int d) const;
  /// Lipschitz constant of the profile, (C delta)^(-d-1).
  double lipschitz(int d) const;
};

/// mu(y) = (1/|P|) sum_p phi(p - y) on a lattice of spacing h (h <= C delta/4)
/// covering the supports.
GridMeasure mollify_point_cloud(const PointCloud& points, const MollifierSpec& spec, double h);

/// Pushforward of a lattice measure onto a linear subspace, as a density on
/// an n-dimensional lattice in the subspace's basis coordinates.
struct ProjectedDensity {
  AffinePlane plane;
  GridMeasure density;
};

/// Each source node's mass is split multilinearly among the 2^n target nodes
/// around its projection. target_h <= 0 selects the smallest source spacing.
ProjectedDensity project_measure(const GridMeasure& mu, const AffinePlane& subspace, double target_h = 0.0);

/// (h^n sum |f|^p)^(1/p); p >= 1.
double lp_norm(const GridMeasure& f, double p);
/// h^n sum |f|^p.
double lp_norm_pow(const GridMeasure& f, double p);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::vector<double> samples;
};

enum class PlaneSampling { Random, Equispaced };

/// Mean over planes of ||pi_V mu||_p^q (q <= 0 means q = p). Equispaced
/// sampling is available for d = 2 only: angles pi (i + u) / N with u drawn
/// from the seed.
Estimate projection_lp_integral(const GridMeasure& mu, int n, double p, std::size_t num_planes,
                                std::uint64_t seed, PlaneSampling sampling = PlaneSampling::Random,
                                double q = 0.0);

/// Same mean over an explicit list of subspaces.
Estimate projection_lp_integral(const GridMeasure& mu, const std::vector<AffinePlane>& planes, double p,
                                double q = 0.0);

/// Equispaced planar lines with angles in [theta_lo, theta_hi].
std::vector<AffinePlane> lines_in_angle_range(double theta_lo, double theta_hi, std::size_t count);

/// Integral of the interpolated density over x + V (V linear), by the
/// lattice rule of the given step (step <= 0 selects the smallest spacing).
double radial_slice_density(const GridMeasure& mu, std::span<const double> x, const AffinePlane& subspace,
                            double step = 0.0);

struct RadialIdentityResult {
  double lhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs = 0.0;
  double rhs_std_error = 0.0;
  double relative_error = 0.0;
  /// Mean of mu_x(V)^q - (pi_{V^perp} mu)(pi_{V^perp} x)^q over the samples,
  /// relative to rhs: the pointwise slice/pushforward gap.
  double paired_gap = 0.0;
  double paired_std_error = 0.0;
  /// Mean of |mu_x(V)^q - (pi_{V^perp} mu)(pi_{V^perp} x)^q|, relative to rhs.
  /// Both sides agree pointwise in the continuum, so this is pure lattice error.
  double pointwise_gap = 0.0;
  double pointwise_std_error = 0.0;
  std::size_t samples = 0;
  std::size_t planes = 0;
};

/// lhs = int int mu_x(V)^q dgamma(V) dmu(x), estimated from `samples` pairs
/// (x by systematic resampling of the node masses, V from a fixed set of
/// `num_planes` subspaces); rhs = mean over the same subspaces of
/// ||pi_{V^perp} mu||_{q+1}^{q+1}.
RadialIdentityResult radial_identity_check(const GridMeasure& mu, int n, double q, std::size_t samples,
                                           std::uint64_t seed, std::size_t num_planes = 360);

struct MattilaResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // estimate of c(d, n); NaN when rhs vanishes
  std::size_t rotations = 0;
};

using ScalarField = std::function<double(std::span<const double>)>;

/// lhs = mean over rotations g of int_{R^n} |x|^(d-n) f(g x) dx, by the
/// midpoint rule of step h on [-R, R]^n; rhs = int_{R^d} f by the same rule
/// on [-R, R]^d. In d = 2 the rotations are equispaced with a seeded shift,
/// otherwise Haar-random.
MattilaResult mattila_identity_check(const ScalarField& f, int d, int n, std::size_t rotations,
                                     std::uint64_t seed, double R, double h);

/// Closed-ball masses of a lattice measure via prefix sums along the last
/// axis.
class BallSummer {
 public:
  explicit BallSummer(const GridMeasure& mu);
  double mass(std::span<const double> centre, double r) const;

 private:
  double row_sum(std::size_t row, std::int64_t lo, std::int64_t hi) const;
  void accumulate(int axis, std::size_t row, double dist2, std::span<const double> c, double r,
                  double& total) const;

  const GridMeasure* mu_;
  std::size_t last_ = 0;
  std::vector<double> prefix_;  // per row: last_ + 1 cumulative masses
};

struct BallScaling {
  std::vector<double> deltas;
  std::vector<double> integrals;
  SlopeFit fit;
  double expected_slope = 0.0;  // d - s + p s
};

/// int mu(B(x, delta))^p dx over a lattice of evaluation points (stride
/// about delta/16 along each axis) for each delta, with a log-log fit.
BallScaling ball_integral_scaling(const GridMeasure& mu, double p, double s, std::span<const double> deltas);

/// Largest mu(B(c, r)) / r^t over centres on an r/2 lattice covering the
/// support, for each radius.
double max_ball_mass_ratio(const GridMeasure& mu, double t, std::span<const double> radii);

/// Discrete alpha-Riesz energy sum_ij m_i m_j |x_i - x_j|^-alpha of an
/// isotropic planar lattice measure; diagonal terms use the exact self-energy
/// of a uniformly charged cell. Requires d = 2 and 0 < alpha < 2.
double riesz_energy(const GridMeasure& mu, double alpha);

}  // namespace fraclab
