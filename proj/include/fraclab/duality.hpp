#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Point-hyperplane duality in R^d. D(x) is the graph
/// {(y, <x', y> + x_d) : y in R^(d-1)} and D*(D(x)) = (-x', x_d).
struct DualityContext {
  int d = 2;
  /// Radius with B(V0, r_d) inside D(B(1)), V0 = R^(d-1) x {0}.
  double r_d = 0.0;
};

/// Largest r such that every sampled plane within d_A-distance r of V0 has
/// its D-preimage in the closed unit ball (bisection over a fixed sample of
/// `samples` planes), halved.
DualityContext calibrate_duality(int d, std::size_t samples = 1'000'000, std::uint64_t seed = 1);

/// The horizontal hyperplane V0 = D(0).
AffinePlane horizontal_plane(int d);

AffinePlane dual_plane(std::span<const double> x);
AffinePlane dual_plane(const Vec& x);

/// D*(V) for a non-vertical hyperplane; DomainError when the normal has no
/// last component (V contains a vertical line).
Vec dual_point(const AffinePlane& plane);

/// d_A between two hyperplanes from their unit normals: sqrt(1 - <n,m>^2)
/// plus the offset distance.
double hyperplane_distance(const AffinePlane& v, const AffinePlane& w);

// Graph coefficients: the hyperplane y_d = a_1 y_1 + ... + a_{d-1} y_{d-1} + a_d
// is stored as (a_1, ..., a_d). These templates run in any exact field.
template <class T>
std::vector<T> dual_plane_coefficients(const std::vector<T>& x) {
  return x;
}

template <class T>
std::vector<T> dual_point_from_coefficients(const std::vector<T>& a) {
  std::vector<T> p(a);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) p[i] = -p[i];
  return p;
}

template <class T>
bool on_graph(const std::vector<T>& y, const std::vector<T>& a) {
  T rhs = a.back();
  for (std::size_t i = 0; i + 1 < a.size(); ++i) rhs += a[i] * y[i];
  return y.back() == rhs;
}

struct DualityReport {
  std::size_t pairs = 0;
  std::size_t incidence_mismatches = 0;  // one side within tol, other beyond 3 tol
  std::size_t factor3_violations = 0;
  double max_primal_over_dual = 0.0;     // dist(x,V) / dist(D*V, Dx)
  double max_dual_over_primal = 0.0;
  double max_roundtrip_error = 0.0;      // |D*(D(x)) - reflect(x)|
  double bilip_forward_lo = 0.0, bilip_forward_hi = 0.0;    // D on the points
  double bilip_backward_lo = 0.0, bilip_backward_hi = 0.0;  // D* on the planes
};

/// Checks incidence equivalence and the factor-3 distance comparison over
/// pairs (x_i, V_i) when `zip` is set, otherwise over all pairs. Points must
/// lie in B(2) and planes in B(V0, r_d).
DualityReport verify_duality_relations(const PointCloud& points, const PlaneFamily& planes,
                                       const DualityContext& ctx, bool zip, double tol = 1e-10);

struct DualizedConfig {
  PointCloud points;                                  // D*(V)
  PlaneFamily planes;                                 // D of the merged fibre points
  std::vector<std::vector<std::uint32_t>> incident;   // per dual point: its fibre's planes
  std::size_t merged_points = 0;                      // fibre points folded into a neighbour
  double point_separation = 0.0;                      // measured
  double plane_separation = 0.0;                      // measured
  double max_fibre_distance = 0.0;                    // max dist(p, plane) over listed pairs
};

/// Dualises a family of hyperplanes with fibres F(V) of points near each
/// plane. Fibre points closer than delta to an earlier kept point are merged
/// into it, so the dual plane family stays delta-separated before mapping.
DualizedConfig dualize_furstenberg_config(const PlaneFamily& family, const std::vector<PointCloud>& fibres,
                                          const DualityContext& ctx, double delta);

}  // namespace fraclab
