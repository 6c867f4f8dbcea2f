#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "fraclab/geometry.hpp"
#include "fraclab/grid_measure.hpp"

namespace fraclab {

/// Packing-based covering number. Points are scanned in index order; each
/// point not yet within 2*rho of an earlier pick becomes a pick. The picks are
/// pairwise more than 2*rho apart, so the count N satisfies
///   N_cover(2*rho) <= N <= N_cover(rho)
/// where N_cover(r) is the minimal number of closed r-balls covering the set.
std::size_t covering_number(const PointCloud& points, double rho);

/// Same count restricted to the listed indices (scanned in the given order).
std::size_t covering_number(const PointCloud& points, std::span<const std::uint32_t> subset,
                            double rho);

struct FrostmanReport {
  double exponent = 0.0;
  double best_constant = 1.0;
  std::vector<double> worst_center;
  double worst_radius = 0.0;
  std::vector<double> scales_tested;
  std::size_t total_covering = 0;
};

/// Maximises |P n B|_delta / (|P|_delta * r^s) over closed balls B of dyadic
/// radius r in {delta, 2 delta, ..., 1} centred at the points of P and at a
/// lattice of spacing r/2 over the bounding box. The reported constant is at
/// least 1 by convention.
FrostmanReport validate_frostman_set(const PointCloud& points, double delta, double s);

/// Largest value of |P n B(c, r)| * r^-t over the same family of centres for
/// each radius in `radii` (raw point counts, no covering).
std::vector<double> max_ball_counts(const PointCloud& points, std::span<const double> radii);

// ---------------------------------------------------------------------------
// Self-similar constructions

struct CantorSpec {
  int d = 1;
  int base = 4;
  std::vector<int> digits;  // kept digits, each in [0, base)
  int level = 1;

  double axis_dimension() const;
  double dimension() const { return d * axis_dimension(); }
};

struct CantorSet {
  PointCloud points;       // centres of the surviving level-k cells
  GridMeasure measure;     // uniform mass on surviving cells, total mass 1
  double dimension = 0.0;  // d * log D / log M
};

/// Level-k product self-similar set in [0,1]^d; measure nodes sit at cell
/// centres with spacing base^-k.
CantorSet gen_product_cantor(const CantorSpec& spec);

struct CantorTimesBall {
  GridMeasure measure;
  int base = 0;
  std::vector<int> digits;
  double cantor_dimension = 0.0;  // achieved dimension of the first-axis factor
  double delta = 0.0;             // base^-level
};

/// Product of a level-k Cantor measure (dimension within 0.02 of s - (d-1)) on
/// the first axis with normalised Lebesgue measure on the open unit
/// (d-1)-ball in the remaining axes. The first axis uses spacing delta/4; the
/// remaining axes use `ball_spacing` (default 1/32).
CantorTimesBall gen_cantor_times_ball(int d, double s, int level, double ball_spacing = 1.0 / 32.0);

/// Smallest base M <= 64 with a digit count D (2 <= D < M) such that
/// |log D / log M - target| <= 0.02, using the best D for that base. Digits
/// are spread evenly across [0, M). Throws InputError naming the closest
/// achievable dimension when no base qualifies.
std::pair<int, std::vector<int>> choose_cantor_digits(double target_dimension);

// ---------------------------------------------------------------------------
// Random instances

/// Random dyadic (delta, t)-set in [0,1]^d with delta = 2^-k. Each kept cell
/// keeps floor(2^t) or ceil(2^t) of its 2^d children (the larger count with
/// probability frac(2^t)), chosen uniformly. Returns the level-k cell centres.
PointCloud gen_random_dyadic_set(int d, double t, int k, std::uint64_t seed);

/// Up to `count` planar lines meeting [0,1]^2 with pairwise d_A >= separation,
/// by rejection from at most 20 * count candidates. With `through` set, each
/// candidate passes through two random points of that cloud.
PlaneFamily gen_random_line_family(std::size_t count, double separation, std::uint64_t seed,
                                   const PointCloud* through = nullptr);

// ---------------------------------------------------------------------------
// Sharpness construction for the planar incidence bound

struct SharpnessParams {
  double s = 0.5;
  double t = 1.5;
  int k = 8;
  double net_constant = 0.5;

  double delta() const;
  double eta() const { return (1.0 - s) * (t - 1.0); }
  std::size_t tube_count() const;
};

struct Tube {
  double x0 = 0.0, x1 = 1.0;  // horizontal extent
  double y0 = 0.0, y1 = 0.0;  // vertical band
};

struct SharpnessInstance {
  SharpnessParams params;
  std::vector<Tube> tubes;
  PointCloud points;
  std::vector<std::size_t> point_tube;       // tube of each point
  std::vector<double> direction_angles;      // Sigma, as angles from e1
  PlaneFamily lines;
  std::vector<std::size_t> line_tube;        // tube each line was built for
  std::vector<std::size_t> line_direction;   // index into direction_angles
  std::size_t rows_per_tube = 0;
  std::size_t columns_per_tube = 0;
};

SharpnessInstance gen_sharpness_construction(const SharpnessParams& params);

}  // namespace fraclab
