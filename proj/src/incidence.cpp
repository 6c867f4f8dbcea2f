#include "fraclab/incidence.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>

#include "fraclab/error.hpp"
#include "fraclab/grid_index.hpp"

namespace fraclab {

namespace {

void check_inputs(const PointCloud& points, const PlaneFamily& planes, double r) {
  require(r > 0.0, "incidence radius must be positive");
  require(points.size() < std::numeric_limits<std::uint32_t>::max(), "too many points");
  for (const auto& v : planes.planes)
    require(v.ambient_dim() == points.dim() || points.empty(),
            "plane and point dimensions differ");
}

IncidenceTally assemble(std::vector<std::vector<std::uint32_t>>& hits, std::size_t num_points,
                        double r) {
  IncidenceTally t;
  t.r = r;
  t.num_points = num_points;
  t.num_planes = hits.size();
  t.plane_start.assign(hits.size() + 1, 0);
  t.per_plane.resize(hits.size());
  for (std::size_t v = 0; v < hits.size(); ++v) {
    t.per_plane[v] = hits[v].size();
    t.plane_start[v + 1] = t.plane_start[v] + hits[v].size();
  }
  t.point_index.reserve(t.plane_start.back());
  t.per_point.assign(num_points, 0);
  for (auto& h : hits) {
    for (auto p : h) ++t.per_point[p];
    t.point_index.insert(t.point_index.end(), h.begin(), h.end());
    std::vector<std::uint32_t>().swap(h);
  }
  return t;
}

// Planar buckets stored twice, column-major and row-major, so that the
// buckets a line's slab meets inside one column (or row) form a single
// contiguous run. Coordinates are copied in bucket order for locality.
class PlanarStripes {
 public:
  PlanarStripes(const PointCloud& points, double min_cell) {
    const std::size_t n = points.size();
    double hi[2] = {points.point(0)[0], points.point(0)[1]};
    lo_[0] = hi[0];
    lo_[1] = hi[1];
    for (std::size_t i = 1; i < n; ++i)
      for (int a = 0; a < 2; ++a) {
        lo_[a] = std::min(lo_[a], points.point(i)[a]);
        hi[a] = std::max(hi[a], points.point(i)[a]);
      }
    // About one point per bucket balances per-column overhead against
    // points tested outside the slab.
    const double area = std::max(hi[0] - lo_[0], min_cell) * std::max(hi[1] - lo_[1], min_cell);
    cell_ = std::max(min_cell, std::sqrt(area / static_cast<double>(n)));
    for (int a = 0; a < 2; ++a) shape_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    std::vector<std::array<std::int64_t, 2>> cell_of(n);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < 2; ++a)
        cell_of[i][a] = std::clamp<std::int64_t>(coord(points.point(i)[a], a), 0, shape_[a] - 1);
    for (int major = 0; major < 2; ++major) {
      auto& layout = layouts_[major];
      const int minor = 1 - major;
      const auto cells = static_cast<std::size_t>(shape_[0] * shape_[1]);
      layout.start.assign(cells + 1, 0);
      auto lin = [&](std::size_t i) {
        return static_cast<std::size_t>(cell_of[i][major] * shape_[minor] + cell_of[i][minor]);
      };
      for (std::size_t i = 0; i < n; ++i) ++layout.start[lin(i) + 1];
      for (std::size_t c = 0; c < cells; ++c) layout.start[c + 1] += layout.start[c];
      std::vector<std::uint32_t> fill(layout.start.begin(), layout.start.end() - 1);
      layout.index.resize(n);
      layout.coords.resize(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto slot = fill[lin(i)]++;
        layout.index[slot] = static_cast<std::uint32_t>(i);
        layout.coords[2 * slot] = points.point(i)[0];
        layout.coords[2 * slot + 1] = points.point(i)[1];
      }
    }
  }

  void scan(const AffinePlane& line, double r, std::vector<std::uint32_t>& out) const {
    const double bx = line.basis()(0, 0), by = line.basis()(1, 0);
    const double nx = -by, ny = bx;
    const double c = nx * line.offset()(0) + ny * line.offset()(1);
    // Sweep along the axis the line is closer to.
    const int sweep = std::abs(ny) >= std::abs(nx) ? 0 : 1;
    const int cross = 1 - sweep;
    const double ns = sweep == 0 ? nx : ny;
    const double nc = sweep == 0 ? ny : nx;
    const auto& layout = layouts_[sweep];
    // Slab boundaries as functions of the sweep coordinate u, in cell units
    // of the cross axis: v(u) = (c -+ r - ns u) / nc.
    const double inv = 1.0 / (nc * cell_);
    double w_lo = (c - r) * inv - lo_[cross] / cell_, w_hi = (c + r) * inv - lo_[cross] / cell_;
    if (w_lo > w_hi) std::swap(w_lo, w_hi);
    const double slope = -ns * inv;
    const double pad = 1e-7 * (1.0 + std::abs(slope));  // rounding slack, in cells
    for (std::int64_t i = 0; i < shape_[sweep]; ++i) {
      const double u0 = lo_[sweep] + static_cast<double>(i) * cell_;
      const double a = slope * u0, b = slope * (u0 + cell_);
      const double vmin = w_lo + std::min(a, b) - pad;
      const double vmax = w_hi + std::max(a, b) + pad;
      const std::int64_t j0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(vmin)));
      const std::int64_t j1 = std::min<std::int64_t>(shape_[cross] - 1, static_cast<std::int64_t>(std::floor(vmax)));
      if (j0 > j1) continue;
      const auto row = static_cast<std::size_t>(i * shape_[cross]);
      const std::uint32_t first = layout.start[row + static_cast<std::size_t>(j0)];
      const std::uint32_t last = layout.start[row + static_cast<std::size_t>(j1) + 1];
      for (std::uint32_t k = first; k < last; ++k)
        if (line.distance({layout.coords.data() + 2 * k, 2}) <= r) out.push_back(layout.index[k]);
    }
  }

 private:
  std::int64_t coord(double x, int axis) const {
    return static_cast<std::int64_t>(std::floor((x - lo_[axis]) / cell_));
  }

  struct Layout {
    std::vector<std::uint32_t> start;
    std::vector<std::uint32_t> index;
    std::vector<double> coords;
  };
  double lo_[2] = {0.0, 0.0};
  double cell_ = 1.0;
  std::int64_t shape_[2] = {1, 1};
  Layout layouts_[2];
};

// General dimension: recursive bisection of the bucket box, pruning boxes
// whose bounding sphere misses the slab.
void scan_boxes(const GridIndex& index, const PointCloud& points, const AffinePlane& plane, double r,
                std::array<std::int64_t, kMaxDim>& blo, std::array<std::int64_t, kMaxDim>& bhi,
                std::vector<std::uint32_t>& out) {
  const int d = index.dim();
  const double cell = index.cell_size();
  std::array<double, kMaxDim> centre{};
  double half_diag2 = 0.0;
  int widest = 0;
  std::int64_t widest_len = 0;
  for (int a = 0; a < d; ++a) {
    const double x0 = index.lower()[a] + static_cast<double>(blo[a]) * cell;
    const double x1 = index.lower()[a] + static_cast<double>(bhi[a] + 1) * cell;
    centre[a] = 0.5 * (x0 + x1);
    half_diag2 += 0.25 * (x1 - x0) * (x1 - x0);
    if (bhi[a] - blo[a] > widest_len) {
      widest_len = bhi[a] - blo[a];
      widest = a;
    }
  }
  const double slack = std::sqrt(half_diag2) * (1.0 + 1e-9) + 1e-12 + cell * 1e-9;
  if (plane.distance({centre.data(), static_cast<std::size_t>(d)}) > r + slack) return;
  if (widest_len == 0) {
    for (auto p : index.cell_points(index.linear_index({blo.data(), static_cast<std::size_t>(d)})))
      if (plane.distance(points.point(p)) <= r) out.push_back(p);
    return;
  }
  const std::int64_t mid = blo[widest] + widest_len / 2;
  const std::int64_t saved_hi = bhi[widest];
  bhi[widest] = mid;
  scan_boxes(index, points, plane, r, blo, bhi, out);
  bhi[widest] = saved_hi;
  const std::int64_t saved_lo = blo[widest];
  blo[widest] = mid + 1;
  scan_boxes(index, points, plane, r, blo, bhi, out);
  blo[widest] = saved_lo;
}

}  // namespace

IncidenceTally count_incidences(const PointCloud& points, const PlaneFamily& planes, double r) {
  check_inputs(points, planes, r);
  const std::size_t m = planes.size();
  std::vector<std::vector<std::uint32_t>> hits(m);
  if (points.empty() || m == 0) return assemble(hits, points.size(), r);
  const int d = points.dim();
  if (d == 2) {
    const PlanarStripes stripes(points, std::max(r, points.separation()));
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t v = 0; v < static_cast<std::int64_t>(m); ++v) {
      auto& out = hits[static_cast<std::size_t>(v)];
      stripes.scan(planes.planes[static_cast<std::size_t>(v)], r, out);
      std::sort(out.begin(), out.end());
    }
    return assemble(hits, points.size(), r);
  }
  const GridIndex index(points, std::max(r, points.separation()));
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t v = 0; v < static_cast<std::int64_t>(m); ++v) {
    auto& out = hits[static_cast<std::size_t>(v)];
    std::array<std::int64_t, kMaxDim> blo{}, bhi{};
    for (int a = 0; a < d; ++a) bhi[a] = index.shape()[a] - 1;
    scan_boxes(index, points, planes.planes[static_cast<std::size_t>(v)], r, blo, bhi, out);
    std::sort(out.begin(), out.end());
  }
  return assemble(hits, points.size(), r);
}

IncidenceTally count_incidences_brute(const PointCloud& points, const PlaneFamily& planes, double r) {
  check_inputs(points, planes, r);
  std::vector<std::vector<std::uint32_t>> hits(planes.size());
  for (std::size_t v = 0; v < planes.size(); ++v)
    for (std::size_t p = 0; p < points.size(); ++p)
      if (planes.planes[v].distance(points.point(p)) <= r) hits[v].push_back(static_cast<std::uint32_t>(p));
  return assemble(hits, points.size(), r);
}

double incidence_bound_rhs(double num_points, double num_planes, double delta, int d, int n, double t,
                           double frostman_constant, double eps) {
  require(n > 0 && n < d, "need 0 < n < d");
  require(t > d - n, "the incidence bound needs t > d - n");
  require(delta > 0.0, "delta must be positive");
  const double denom = d + n - t;
  const double plane_exp = n / denom;
  const double delta_exp = n * (t + 1.0 - d) * (d - n) / denom;
  return std::pow(delta, -eps) * frostman_constant * num_points * std::pow(num_planes, plane_exp) *
         std::pow(delta, delta_exp);
}

std::optional<PigeonholeResult> pigeonhole_counts(const std::vector<std::size_t>& counts) {
  std::size_t max_count = 0;
  for (auto c : counts) max_count = std::max(max_count, c);
  if (max_count == 0) return std::nullopt;
  const int classes = static_cast<int>(std::bit_width(max_count));  // floor(log2 max) + 1
  std::vector<std::size_t> members(classes, 0);
  for (auto c : counts)
    if (c > 0) ++members[std::bit_width(c) - 1];
  int best = 0;
  double best_score = -1.0;
  for (int j = 0; j < classes; ++j) {
    const double score = static_cast<double>(members[j]) * std::ldexp(1.0, j);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  PigeonholeResult res;
  res.dyadic_class = best;
  res.log_factor = 2.0 * classes;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto c = counts[i];
    if (c == 0 || static_cast<int>(std::bit_width(c)) - 1 != best) continue;
    res.members.push_back(static_cast<std::uint32_t>(i));
    res.N = std::max(res.N, c);
    res.covered_pairs += c;
  }
  return res;
}

std::optional<PigeonholeResult> pigeonhole_uniform(const IncidenceTally& tally, PigeonholeSide side) {
  if (tally.empty()) return std::nullopt;
  return pigeonhole_counts(side == PigeonholeSide::Planes ? tally.per_plane : tally.per_point);
}

std::optional<TwoStagePigeonhole> pigeonhole_two_stage(const IncidenceTally& tally) {
  auto first = pigeonhole_uniform(tally, PigeonholeSide::Planes);
  if (!first) return std::nullopt;
  std::vector<std::size_t> restricted(tally.num_points, 0);
  std::size_t pairs = 0;
  for (auto v : first->members)
    for (auto p : tally.plane_points(v)) {
      ++restricted[p];
      ++pairs;
    }
  auto second = pigeonhole_counts(restricted);
  return TwoStagePigeonhole{std::move(*first), std::move(*second), pairs};
}

DirectionSeparationStats direction_separation(const IncidenceTally& tally, const PlaneFamily& planes,
                                              double gap) {
  require(tally.num_planes == planes.size(), "tally and plane family differ in size");
  std::vector<std::vector<std::uint32_t>> by_point(tally.num_points);
  for (std::size_t v = 0; v < tally.num_planes; ++v)
    for (auto p : tally.plane_points(v)) by_point[p].push_back(static_cast<std::uint32_t>(v));
  // Equal-dimension subspaces: ||P_V - P_W|| is the sine of the largest
  // principal angle, read off the smallest singular value of B_V^T B_W.
  const std::size_t m = planes.size();
  std::vector<Mat> bases(m);
  for (std::size_t v = 0; v < m; ++v) bases[v] = planes.planes[v].basis();
  const bool lines = m > 0 && bases[0].cols() == 1;
  auto close = [&](std::uint32_t v, std::uint32_t w) {
    double c = 0.0;
    if (lines) {
      c = std::abs(bases[v].col(0).dot(bases[w].col(0)));
    } else if (bases[v].cols() != bases[w].cols()) {
      return false;  // the projector difference has norm 1
    } else {
      const Mat cross = bases[v].transpose() * bases[w];
      c = Eigen::JacobiSVD<Mat>(cross).singularValues().minCoeff();
    }
    return std::sqrt(std::max(0.0, 1.0 - c * c)) < gap;
  };
  std::vector<double> ratio(by_point.size(), -1.0);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(by_point.size()); ++i) {
    const auto& list = by_point[static_cast<std::size_t>(i)];
    if (list.empty()) continue;
    std::vector<std::uint32_t> kept;
    for (auto v : list) {
      bool far = true;
      for (auto w : kept) {
        if (close(v, w)) {
          far = false;
          break;
        }
      }
      if (far) kept.push_back(v);
    }
    ratio[static_cast<std::size_t>(i)] = static_cast<double>(kept.size()) / static_cast<double>(list.size());
  }
  DirectionSeparationStats stats;
  double sum = 0.0;
  for (double r : ratio) {
    if (r < 0.0) continue;
    stats.min_ratio = stats.points_with_planes == 0 ? r : std::min(stats.min_ratio, r);
    sum += r;
    ++stats.points_with_planes;
  }
  if (stats.points_with_planes > 0) stats.mean_ratio = sum / static_cast<double>(stats.points_with_planes);
  return stats;
}

}  // namespace fraclab
