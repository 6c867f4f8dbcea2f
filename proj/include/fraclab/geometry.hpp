#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fraclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest ambient dimension supported by the fixed-size kernels.
inline constexpr int kMaxDim = 8;

/// Tolerance for exact-geometry invariants.
inline constexpr double kExactTol = 1e-12;
/// Tolerance for composed operations.
inline constexpr double kComposedTol = 1e-10;

/// Dyadic scale delta = 2^-k.
struct Resolution {
  int k = 0;

  explicit Resolution(int exponent);
  double delta() const;
};

/// Affine n-plane V = V0 + a in R^d, with V0 spanned by orthonormal columns
/// of `basis` and the offset a orthogonal to V0.
class AffinePlane {
 public:
  /// Validates orthonormality and orthogonality of the offset (1e-12).
  AffinePlane(Mat basis, Vec offset);

  /// Linear subspace spanned by the given basis (offset zero).
  explicit AffinePlane(Mat basis);

  /// Plane through `point` spanned by the (not necessarily orthonormal)
  /// columns of `directions`. The basis is orthonormalized and the offset is
  /// the component of `point` orthogonal to the span.
  static AffinePlane through(const Vec& point, const Mat& directions);

  int ambient_dim() const { return static_cast<int>(basis_.rows()); }
  int plane_dim() const { return static_cast<int>(basis_.cols()); }
  const Mat& basis() const { return basis_; }
  const Vec& offset() const { return offset_; }
  bool is_linear() const { return offset_.norm() <= kExactTol; }

  /// Orthogonal projector onto the direction subspace.
  Mat projector() const { return basis_ * basis_.transpose(); }

  /// Euclidean distance from x to the plane. This is the single distance
  /// predicate used everywhere incidences are decided. Hyperplanes use the
  /// stored unit normal, other planes the residual of the projection.
  double distance(std::span<const double> x) const {
    if (!hyperplane_) return residual_distance(x);
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - flat_offset_[a]) * normal_[a];
    return std::abs(s);
  }

 private:
  void cache_rows();
  double residual_distance(std::span<const double> x) const;

  Mat basis_;
  Vec offset_;
  // Row-major copies for the hot distance kernel.
  std::vector<double> flat_basis_;
  std::vector<double> flat_offset_;
  bool hyperplane_ = false;
  std::array<double, kMaxDim> normal_{};
};

struct PlaneFamily {
  std::vector<AffinePlane> planes;
  /// Claimed pairwise lower bound on grassmann_distance.
  double separation = 0.0;

  std::size_t size() const { return planes.size(); }
};

/// Finite point set in R^d stored row-major.
class PointCloud {
 public:
  PointCloud() = default;

  /// `bounding_radius` < 0 means "use the smallest origin-centred ball".
  /// Throws InputError if the claimed separation or bound is violated.
  PointCloud(int dim, std::vector<double> coords, double separation = 0.0,
             double bounding_radius = -1.0);

  static PointCloud from_vectors(const std::vector<Vec>& points,
                                 double separation = 0.0,
                                 double bounding_radius = -1.0);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const { return size() == 0; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  Vec vec(std::size_t i) const;
  const std::vector<double>& coords() const { return coords_; }
  double separation() const { return separation_; }
  double bounding_radius() const { return bounding_radius_; }

  /// Minimum pairwise distance (infinity for fewer than two points).
  double min_pairwise_distance() const;

 private:
  int dim_ = 0;
  std::vector<double> coords_;
  double separation_ = 0.0;
  double bounding_radius_ = 0.0;
};

double dist_point_plane(std::span<const double> x, const AffinePlane& plane);
double dist_point_plane(const Vec& x, const AffinePlane& plane);

/// d_A(V, W) = ||pi_V0 - pi_W0||_op + |a - b|.
double grassmann_distance(const AffinePlane& v, const AffinePlane& w);

/// `count` independent gamma_{d,n}-distributed linear subspaces; sample i is
/// a function of (seed, i) only.
std::vector<AffinePlane> sample_grassmannian(int d, int n, std::size_t count,
                                             std::uint64_t seed);

/// Linear (d-n)-plane orthogonal to a linear n-plane.
AffinePlane orthocomplement(const AffinePlane& plane);

/// Orthonormal basis for the column span (modified Gram-Schmidt with one
/// reorthogonalization pass). Throws on rank deficiency.
Mat orthonormalize(const Mat& columns);

/// Line through the origin in R^2 at angle theta from the x-axis.
AffinePlane line_at_angle(double theta, double offset = 0.0);

/// Fraction of `samples` within d_A-distance r of `center`.
double grassmann_ball_fraction(const AffinePlane& center,
                               const std::vector<AffinePlane>& samples,
                               double r);

}  // namespace fraclab
