#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// The pair set {(p, V) : dist(p, V) <= r}, stored plane by plane with point
/// indices ascending inside each plane (CSR layout).
struct IncidenceTally {
  double r = 0.0;
  std::size_t num_points = 0;
  std::size_t num_planes = 0;
  std::vector<std::size_t> plane_start;   // size num_planes + 1
  std::vector<std::uint32_t> point_index;  // size = pair count
  std::vector<std::size_t> per_plane;      // N_V
  std::vector<std::size_t> per_point;      // M_p

  std::size_t pair_count() const { return point_index.size(); }
  bool empty() const { return point_index.empty(); }

  /// Points incident to plane v.
  std::span<const std::uint32_t> plane_points(std::size_t v) const {
    return {point_index.data() + plane_start[v], plane_start[v + 1] - plane_start[v]};
  }

  bool operator==(const IncidenceTally&) const = default;
};

/// Grid-indexed exact counting. Each plane visits only the buckets meeting
/// its r-slab; every candidate is decided by AffinePlane::distance, so the
/// result equals count_incidences_brute bit for bit.
IncidenceTally count_incidences(const PointCloud& points, const PlaneFamily& planes, double r);

/// Reference double loop.
IncidenceTally count_incidences_brute(const PointCloud& points, const PlaneFamily& planes, double r);

/// delta^-eps * C_F * |P| * |V|^(n/(d+n-t)) * delta^(n(t+1-d)(d-n)/(d+n-t)).
double incidence_bound_rhs(double num_points, double num_planes, double delta, int d, int n,
                           double t, double frostman_constant, double eps);

enum class PigeonholeSide { Planes, Points };

struct PigeonholeResult {
  std::size_t N = 0;                    // largest count inside the selected class
  std::vector<std::uint32_t> members;   // selected planes (or points), ascending
  int dyadic_class = 0;                 // counts lie in [2^j, 2^(j+1))
  std::size_t covered_pairs = 0;        // pairs carried by the members
  double log_factor = 1.0;              // 2 * (number of dyadic classes)
};

/// Buckets the positive per-plane (or per-point) counts into dyadic classes
/// and keeps the class maximising |class| * 2^j; the lowest class wins ties.
/// Returns nullopt for an empty tally.
std::optional<PigeonholeResult> pigeonhole_uniform(const IncidenceTally& tally, PigeonholeSide side);

/// Same selection on an arbitrary count vector (zeros ignored).
std::optional<PigeonholeResult> pigeonhole_counts(const std::vector<std::size_t>& counts);

struct TwoStagePigeonhole {
  PigeonholeResult planes;  // V_1 with N/2 <= N_V <= N
  PigeonholeResult points;  // P_1 with M/2 <= M_p <= M, counted against V_1 only
  std::size_t pairs_in_v1 = 0;
};

/// Planes first, then points restricted to the pairs with planes in V_1.
std::optional<TwoStagePigeonhole> pigeonhole_two_stage(const IncidenceTally& tally);

/// For each point, the size of a greedy (gap)-separated subset of the
/// direction subspaces of its incident planes divided by the number of such
/// planes (1 when the point has no planes).
struct DirectionSeparationStats {
  double min_ratio = 1.0;
  double mean_ratio = 1.0;
  std::size_t points_with_planes = 0;
};
DirectionSeparationStats direction_separation(const IncidenceTally& tally, const PlaneFamily& planes,
                                              double gap);

}  // namespace fraclab
