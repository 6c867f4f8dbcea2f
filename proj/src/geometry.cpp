#include "fraclab/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fraclab/error.hpp"
#include "fraclab/grid_index.hpp"
#include "fraclab/random.hpp"

namespace fraclab {

namespace {
constexpr std::uint64_t kGrassmannStream = 0x6772617373ULL;  // "grass"
}

Resolution::Resolution(int exponent) : k(exponent) {
  require(exponent >= 0, "resolution exponent must be non-negative");
}

double Resolution::delta() const { return std::ldexp(1.0, -k); }

// ---------------------------------------------------------------------------
// AffinePlane

AffinePlane::AffinePlane(Mat basis, Vec offset)
    : basis_(std::move(basis)), offset_(std::move(offset)) {
  const auto d = basis_.rows();
  const auto n = basis_.cols();
  require(d >= 2 && d <= kMaxDim, "ambient dimension must be in [2, 8]");
  require(n > 0 && n < d, "plane dimension must satisfy 0 < n < d");
  require(offset_.size() == d, "offset dimension does not match basis");
  const Mat gram = basis_.transpose() * basis_;
  const double ortho_err = (gram - Mat::Identity(n, n)).cwiseAbs().maxCoeff();
  require(ortho_err <= kExactTol, "basis is not orthonormal (error " + std::to_string(ortho_err) + ")");
  const double offset_err = (basis_.transpose() * offset_).cwiseAbs().maxCoeff();
  require(offset_err <= kExactTol,
          "offset is not orthogonal to the direction subspace (error " + std::to_string(offset_err) + ")");
  cache_rows();
}

AffinePlane::AffinePlane(Mat basis) : AffinePlane(basis, Vec::Zero(basis.rows())) {}

AffinePlane AffinePlane::through(const Vec& point, const Mat& directions) {
  require(point.size() == directions.rows(), "point and directions differ in dimension");
  Mat q = orthonormalize(directions);
  Vec offset = point - q * (q.transpose() * point);
  // One correction pass keeps the offset orthogonal to machine precision.
  offset -= q * (q.transpose() * offset);
  return AffinePlane(std::move(q), std::move(offset));
}

void AffinePlane::cache_rows() {
  const auto d = basis_.rows();
  const auto n = basis_.cols();
  flat_basis_.resize(static_cast<std::size_t>(d * n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index a = 0; a < d; ++a) flat_basis_[i * d + a] = basis_(a, i);
  flat_offset_.assign(offset_.data(), offset_.data() + d);
  hyperplane_ = n == d - 1;
  if (!hyperplane_) return;
  if (d == 2) {
    normal_[0] = -basis_(1, 0);
    normal_[1] = basis_(0, 0);
    return;
  }
  // Last column of a full QR of the basis spans the orthocomplement.
  const Eigen::HouseholderQR<Mat> qr(basis_);
  const Mat q = qr.householderQ() * Mat::Identity(d, d);
  for (Eigen::Index a = 0; a < d; ++a) normal_[static_cast<std::size_t>(a)] = q(a, d - 1);
}

double AffinePlane::residual_distance(std::span<const double> x) const {
  const int d = ambient_dim();
  const int n = plane_dim();
  std::array<double, kMaxDim> r{};
  for (int a = 0; a < d; ++a) r[a] = x[a] - flat_offset_[a];
  std::array<double, kMaxDim> coef{};
  for (int i = 0; i < n; ++i) {
    const double* b = flat_basis_.data() + i * d;
    double c = 0.0;
    for (int a = 0; a < d; ++a) c += r[a] * b[a];
    coef[i] = c;
  }
  double s = 0.0;
  for (int a = 0; a < d; ++a) {
    double v = r[a];
    for (int i = 0; i < n; ++i) v -= coef[i] * flat_basis_[i * d + a];
    s += v * v;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// PointCloud

PointCloud::PointCloud(int dim, std::vector<double> coords, double separation,
                       double bounding_radius)
    : dim_(dim), coords_(std::move(coords)), separation_(separation) {
  require(dim >= 1 && dim <= kMaxDim, "point dimension must be in [1, 8]");
  require(coords_.size() % static_cast<std::size_t>(dim) == 0,
          "coordinate count is not a multiple of the dimension");
  require(separation >= 0.0, "separation must be non-negative");
  double max_norm = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0.0;
    for (double c : point(i)) s += c * c;
    max_norm = std::max(max_norm, std::sqrt(s));
  }
  if (bounding_radius < 0.0) {
    bounding_radius_ = max_norm;
  } else {
    require(max_norm <= bounding_radius * (1.0 + kExactTol) + kExactTol,
            "a point lies outside the stated bounding ball");
    bounding_radius_ = bounding_radius;
  }
  if (separation_ > 0.0 && size() > 1) {
    const double found = min_pairwise_distance();
    require(found >= separation_ * (1.0 - kComposedTol),
            "points are closer than the claimed separation (" + std::to_string(found) + " < " +
                std::to_string(separation_) + ")");
  }
}

PointCloud PointCloud::from_vectors(const std::vector<Vec>& points, double separation,
                                    double bounding_radius) {
  require(!points.empty(), "cannot infer the dimension of an empty point list");
  const auto d = points.front().size();
  std::vector<double> coords;
  coords.reserve(points.size() * static_cast<std::size_t>(d));
  for (const auto& p : points) {
    require(p.size() == d, "points differ in dimension");
    coords.insert(coords.end(), p.data(), p.data() + d);
  }
  return PointCloud(static_cast<int>(d), std::move(coords), separation, bounding_radius);
}

Vec PointCloud::vec(std::size_t i) const {
  auto p = point(i);
  return Eigen::Map<const Vec>(p.data(), dim_);
}

double PointCloud::min_pairwise_distance() const {
  const std::size_t n = size();
  if (n < 2) return std::numeric_limits<double>::infinity();
  // Bucket at a cell size large enough that the nearest neighbour of a
  // typical point is in an adjacent cell; widen the query until a hit.
  double lo_extent = std::numeric_limits<double>::infinity();
  {
    std::vector<double> lo(dim_, 1e300), hi(dim_, -1e300);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < dim_; ++a) {
        lo[a] = std::min(lo[a], point(i)[a]);
        hi[a] = std::max(hi[a], point(i)[a]);
      }
    double vol = 1.0;
    int active = 0;
    for (int a = 0; a < dim_; ++a)
      if (hi[a] > lo[a]) {
        vol *= hi[a] - lo[a];
        ++active;
      }
    lo_extent = active == 0 ? 0.0 : std::pow(vol / static_cast<double>(n), 1.0 / active);
  }
  if (lo_extent == 0.0) return 0.0;
  const GridIndex index(*this, lo_extent);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double radius = index.cell_size();
    double local = std::numeric_limits<double>::infinity();
    while (!std::isfinite(local)) {
      index.for_each_in_ball(point(i), radius, [&](std::uint32_t j) {
        if (j == i) return;
        double s = 0.0;
        for (int a = 0; a < dim_; ++a) {
          const double diff = point(i)[a] - point(j)[a];
          s += diff * diff;
        }
        local = std::min(local, std::sqrt(s));
      });
      if (radius > 1e6 * index.cell_size()) break;
      radius *= 2.0;
    }
    best = std::min(best, local);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Free functions

double dist_point_plane(std::span<const double> x, const AffinePlane& plane) {
  require(static_cast<int>(x.size()) == plane.ambient_dim(),
          "point dimension does not match the plane");
  return plane.distance(x);
}

double dist_point_plane(const Vec& x, const AffinePlane& plane) {
  return dist_point_plane(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                          plane);
}

double grassmann_distance(const AffinePlane& v, const AffinePlane& w) {
  require(v.ambient_dim() == w.ambient_dim() && v.plane_dim() == w.plane_dim(),
          "planes differ in ambient or plane dimension");
  const Mat diff = v.projector() - w.projector();
  const Eigen::JacobiSVD<Mat> svd(diff);
  const double op = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  return op + (v.offset() - w.offset()).norm();
}

Mat orthonormalize(const Mat& columns) {
  Mat q = columns;
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    const double original = q.col(j).norm();
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
    const double norm = q.col(j).norm();
    require(norm > 1e-10 * std::max(1.0, original), "direction vectors are linearly dependent");
    q.col(j) /= norm;
  }
  return q;
}

std::vector<AffinePlane> sample_grassmannian(int d, int n, std::size_t count, std::uint64_t seed) {
  require(d >= 2 && d <= kMaxDim && n > 0 && n < d, "need 0 < n < d <= 8");
  require(count >= 1, "count must be positive");
  std::vector<AffinePlane> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kGrassmannStream, i));
    Mat g(d, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < d; ++r) g(r, c) = rng.normal();
    out.emplace_back(orthonormalize(g));
  }
  return out;
}

AffinePlane orthocomplement(const AffinePlane& plane) {
  require(plane.is_linear(), "orthocomplement needs a linear subspace (zero offset)");
  const int d = plane.ambient_dim();
  const int n = plane.plane_dim();
  const Eigen::HouseholderQR<Mat> qr(plane.basis());
  const Mat q = qr.householderQ() * Mat::Identity(d, d);
  Mat complement = q.rightCols(d - n);
  // Project out any residual overlap and renormalize.
  complement -= plane.basis() * (plane.basis().transpose() * complement);
  return AffinePlane(orthonormalize(complement));
}

AffinePlane line_at_angle(double theta, double offset) {
  Mat b(2, 1);
  b << std::cos(theta), std::sin(theta);
  Vec normal(2);
  normal << -std::sin(theta), std::cos(theta);
  return AffinePlane(b, offset * normal);
}

double grassmann_ball_fraction(const AffinePlane& center, const std::vector<AffinePlane>& samples,
                               double r) {
  if (samples.empty()) return 0.0;
  std::size_t inside = 0;
  for (const auto& s : samples)
    if (grassmann_distance(center, s) <= r) ++inside;
  return static_cast<double>(inside) / static_cast<double>(samples.size());
}

}  // namespace fraclab
