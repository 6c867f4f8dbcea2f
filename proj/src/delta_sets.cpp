#include "fraclab/delta_sets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <omp.h>

#include "fraclab/error.hpp"
#include "fraclab/grid_index.hpp"
#include "fraclab/random.hpp"

namespace fraclab {

namespace {
constexpr std::uint64_t kDyadicStream = 0x647961646963ULL;  // "dyadic"
constexpr std::uint64_t kLineStream = 0x6c696e6573ULL;      // "lines"
}  // namespace

// ---------------------------------------------------------------------------
// Covering numbers

std::size_t covering_number(const PointCloud& points, std::span<const std::uint32_t> subset,
                            double rho) {
  require(rho > 0.0, "covering radius must be positive");
  if (subset.empty()) return 0;
  const double exclusion = 2.0 * rho;
  const GridIndex index(points, exclusion);
  std::vector<char> excluded(points.size(), 0);
  std::size_t picks = 0;
  for (auto i : subset) {
    if (excluded[i]) continue;
    ++picks;
    index.for_each_in_ball(points.point(i), exclusion, [&](std::uint32_t j) { excluded[j] = 1; });
  }
  return picks;
}

std::size_t covering_number(const PointCloud& points, double rho) {
  std::vector<std::uint32_t> all(points.size());
  std::iota(all.begin(), all.end(), 0u);
  return covering_number(points, all, rho);
}

namespace {

// Neighbour lists at a fixed exclusion radius, so that the packing count of
// many subsets can be evaluated without rebuilding an index per subset.
class PackingCounter {
 public:
  PackingCounter(const PointCloud& points, double exclusion) {
    const GridIndex index(points, exclusion);
    const std::size_t n = points.size();
    start_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      index.for_each_in_ball(points.point(i), exclusion, [&](std::uint32_t j) {
        if (j != i) neighbours_.push_back(j);
      });
      start_[i + 1] = neighbours_.size();
    }
  }

  /// Greedy packing count of `subset` (in order); `stamp` is scratch of size
  /// n that must not contain `mark`.
  std::size_t count(std::span<const std::uint32_t> subset, std::vector<std::uint32_t>& stamp,
                    std::uint32_t mark) const {
    std::size_t picks = 0;
    for (auto i : subset) {
      if (stamp[i] == mark) continue;
      ++picks;
      for (std::size_t e = start_[i]; e < start_[i + 1]; ++e) stamp[neighbours_[e]] = mark;
    }
    return picks;
  }

 private:
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> neighbours_;
};

struct Bounds {
  std::vector<double> lo, hi;
};

Bounds bounding_box(const PointCloud& points) {
  const int d = points.dim();
  Bounds b{std::vector<double>(d, std::numeric_limits<double>::infinity()),
           std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int a = 0; a < d; ++a) {
      b.lo[a] = std::min(b.lo[a], points.point(i)[a]);
      b.hi[a] = std::max(b.hi[a], points.point(i)[a]);
    }
  return b;
}

// Centres for radius r: all points of P followed by the lattice lo + j*(r/2)
// covering the bounding box. Centre c is materialised on demand.
class CentreSet {
 public:
  CentreSet(const PointCloud& points, const Bounds& box, double r)
      : points_(&points), box_(&box), step_(0.5 * r) {
    const int d = points.dim();
    counts_.resize(d);
    lattice_ = 1;
    for (int a = 0; a < d; ++a) {
      counts_[a] = static_cast<std::size_t>(std::floor((box.hi[a] - box.lo[a]) / step_)) + 1;
      lattice_ *= counts_[a];
    }
  }

  std::size_t size() const { return points_->size() + lattice_; }

  void centre(std::size_t c, std::span<double> out) const {
    const int d = points_->dim();
    if (c < points_->size()) {
      auto p = points_->point(c);
      std::copy(p.begin(), p.end(), out.begin());
      return;
    }
    std::size_t rem = c - points_->size();
    for (int a = d - 1; a >= 0; --a) {
      out[a] = box_->lo[a] + static_cast<double>(rem % counts_[a]) * step_;
      rem /= counts_[a];
    }
  }

 private:
  const PointCloud* points_;
  const Bounds* box_;
  double step_;
  std::vector<std::size_t> counts_;
  std::size_t lattice_ = 1;
};

struct BestBall {
  double ratio = -1.0;
  std::size_t radius_index = 0;
  std::size_t centre_index = 0;

  bool better_than(const BestBall& o) const {
    if (ratio != o.ratio) return ratio > o.ratio;
    if (radius_index != o.radius_index) return radius_index < o.radius_index;
    return centre_index < o.centre_index;
  }
};

std::vector<double> dyadic_radii(double delta) {
  std::vector<double> radii;
  for (double r = delta; r <= 1.0 * (1.0 + 1e-12); r *= 2.0) radii.push_back(r);
  if (radii.empty()) radii.push_back(1.0);
  return radii;
}

}  // namespace

FrostmanReport validate_frostman_set(const PointCloud& points, double delta, double s) {
  require(!points.empty(), "validate_frostman_set needs a non-empty point set");
  require(delta > 0.0, "delta must be positive");
  require(points.separation() >= delta * (1.0 - kComposedTol),
          "delta exceeds the point cloud's separation");
  const int d = points.dim();
  FrostmanReport report;
  report.exponent = s;
  report.scales_tested = dyadic_radii(delta);
  report.total_covering = covering_number(points, delta);
  const double total = static_cast<double>(report.total_covering);
  const PackingCounter packer(points, 2.0 * delta);
  const Bounds box = bounding_box(points);
  const std::size_t n = points.size();

  BestBall best;
  for (std::size_t ri = 0; ri < report.scales_tested.size(); ++ri) {
    const double r = report.scales_tested[ri];
    // A ball holds at most the whole set, so no ball at this radius can beat
    // a ratio above r^-s; ties go to the smaller radius anyway.
    if (best.ratio >= std::pow(r, -s)) continue;
    const GridIndex index(points, std::max(r, delta));
    const CentreSet centres(points, box, r);
    const double denom = total * std::pow(r, s);
    const auto m = static_cast<std::int64_t>(centres.size());
#pragma omp parallel
    {
      BestBall local = best;
      std::vector<std::uint32_t> stamp(n, 0);
      std::uint32_t mark = 0;
      std::vector<std::uint32_t> members;
      std::array<double, kMaxDim> c{};
#pragma omp for schedule(dynamic, 256)
      for (std::int64_t ci = 0; ci < m; ++ci) {
        centres.centre(static_cast<std::size_t>(ci), {c.data(), static_cast<std::size_t>(d)});
        members.clear();
        index.for_each_in_ball({c.data(), static_cast<std::size_t>(d)}, r,
                               [&](std::uint32_t j) { members.push_back(j); });
        // The packing count is at most |members|; skip balls that cannot win.
        if (members.empty() || static_cast<double>(members.size()) / denom < local.ratio) continue;
        // Greedy order is the index enumeration order (cell by cell).
        if (++mark == 0) {
          std::fill(stamp.begin(), stamp.end(), 0);
          mark = 1;
        }
        const double ratio = static_cast<double>(packer.count(members, stamp, mark)) / denom;
        const BestBall here{ratio, ri, static_cast<std::size_t>(ci)};
        if (here.better_than(local)) local = here;
      }
#pragma omp critical
      if (local.better_than(best)) best = local;
    }
  }
  report.best_constant = std::max(1.0, best.ratio);
  report.worst_radius = report.scales_tested[best.radius_index];
  report.worst_center.assign(d, 0.0);
  const CentreSet centres(points, box, report.worst_radius);
  centres.centre(best.centre_index, report.worst_center);
  return report;
}

std::vector<double> max_ball_counts(const PointCloud& points, std::span<const double> radii) {
  require(!points.empty(), "max_ball_counts needs a non-empty point set");
  const int d = points.dim();
  const Bounds box = bounding_box(points);
  std::vector<double> result;
  for (double r : radii) {
    require(r > 0.0, "radii must be positive");
    const GridIndex index(points, r);
    const CentreSet centres(points, box, r);
    const auto m = static_cast<std::int64_t>(centres.size());
    std::size_t best = 0;
#pragma omp parallel
    {
      std::size_t local = 0;
      std::array<double, kMaxDim> c{};
#pragma omp for schedule(dynamic, 256)
      for (std::int64_t ci = 0; ci < m; ++ci) {
        centres.centre(static_cast<std::size_t>(ci), {c.data(), static_cast<std::size_t>(d)});
        std::size_t count = 0;
        index.for_each_in_ball({c.data(), static_cast<std::size_t>(d)}, r,
                               [&](std::uint32_t) { ++count; });
        local = std::max(local, count);
      }
#pragma omp critical
      best = std::max(best, local);
    }
    result.push_back(static_cast<double>(best));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Cantor constructions

double CantorSpec::axis_dimension() const {
  return std::log(static_cast<double>(digits.size())) / std::log(static_cast<double>(base));
}

namespace {

void check_cantor_spec(const CantorSpec& spec) {
  const auto D = static_cast<int>(spec.digits.size());
  require(spec.d >= 1 && spec.d <= kMaxDim, "Cantor dimension d must be in [1, 8]");
  require(spec.base >= 3, "Cantor base must be at least 3");
  require(D >= 2 && D < spec.base, "need 2 <= |digits| < base");
  require(spec.level >= 1, "Cantor level must be at least 1");
  std::vector<int> sorted = spec.digits;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "digits must be distinct");
  require(sorted.front() >= 0 && sorted.back() < spec.base, "digits must lie in [0, base)");
}

// Left endpoints (in units of base^-level) of the surviving intervals.
std::vector<std::int64_t> cantor_cells(int base, const std::vector<int>& digits, int level) {
  std::vector<std::int64_t> cells{0};
  for (int j = 0; j < level; ++j) {
    std::vector<std::int64_t> next;
    next.reserve(cells.size() * digits.size());
    for (auto c : cells)
      for (int dg : digits) next.push_back(c * base + dg);
    cells = std::move(next);
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

CantorSet gen_product_cantor(const CantorSpec& spec) {
  check_cantor_spec(spec);
  const int d = spec.d;
  const auto cells = cantor_cells(spec.base, spec.digits, spec.level);
  const std::int64_t side = ipow(spec.base, spec.level);
  require(std::pow(static_cast<double>(side), d) <= 6.7e7, "Cantor lattice too large for a dense grid");
  const double h = 1.0 / static_cast<double>(side);
  const std::size_t per_axis = cells.size();
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= per_axis;

  std::vector<double> coords;
  coords.reserve(total * static_cast<std::size_t>(d));
  std::vector<std::size_t> shape(d, static_cast<std::size_t>(side));
  GridMeasure measure = GridMeasure::zeros(h, std::vector<double>(d, 0.5 * h), shape);
  auto& vals = measure.mutable_values();
  const double cell_value = 1.0 / (static_cast<double>(total) * measure.cell_volume());
  std::vector<std::size_t> idx(d), node(d);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = rem % per_axis;
      rem /= per_axis;
    }
    for (int a = 0; a < d; ++a) {
      node[a] = static_cast<std::size_t>(cells[idx[a]]);
      coords.push_back((static_cast<double>(cells[idx[a]]) + 0.5) * h);
    }
    vals[measure.linear(node)] = cell_value;
  }
  CantorSet out{PointCloud(d, std::move(coords), h), std::move(measure), spec.dimension()};
  return out;
}

std::pair<int, std::vector<int>> choose_cantor_digits(double target) {
  require(target > 0.0 && target <= 1.0, "Cantor target dimension must be in (0, 1]");
  double closest = 0.0;
  double closest_err = std::numeric_limits<double>::infinity();
  for (int base = 3; base <= 64; ++base) {
    int best_digits = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int D = 2; D < base; ++D) {
      const double dim = std::log(static_cast<double>(D)) / std::log(static_cast<double>(base));
      const double err = std::abs(dim - target);
      if (err < best_err) {
        best_err = err;
        best_digits = D;
      }
      if (err < closest_err) {
        closest_err = err;
        closest = dim;
      }
    }
    if (best_err <= 0.02) {
      std::vector<int> digits(best_digits);
      for (int j = 0; j < best_digits; ++j)
        digits[j] = static_cast<int>(std::lround(static_cast<double>(j) * (base - 1) / (best_digits - 1)));
      return {base, digits};
    }
  }
  throw InputError("no base <= 64 reaches Cantor dimension " + std::to_string(target) +
                   " within 0.02; closest achievable is " + std::to_string(closest));
}

CantorTimesBall gen_cantor_times_ball(int d, double s, int level, double ball_spacing) {
  require(d >= 2 && d <= 4, "Cantor x ball needs 2 <= d <= 4");
  const double target = s - (d - 1);
  require(target > 0.0 && target <= 1.0, "need s - (d - 1) in (0, 1]");
  require(level >= 1, "level must be at least 1");
  require(ball_spacing > 0.0 && ball_spacing <= 0.5, "ball spacing must be in (0, 1/2]");
  auto [base, digits] = choose_cantor_digits(target);
  const auto cells = cantor_cells(base, digits, level);
  const double delta = std::pow(static_cast<double>(base), -level);
  constexpr int kSub = 4;  // nodes per surviving interval
  const double hx = delta / kSub;
  const auto nx = static_cast<std::size_t>(ipow(base, level)) * kSub;
  require(static_cast<double>(nx) <= 4.0e6, "Cantor axis too fine");

  // Transverse factor: uniform on the open unit (d-1)-ball.
  GridMeasure ball = make_uniform_ball(d - 1, 1.0, ball_spacing);
  // Cantor factor along the first axis (1-d weights).
  std::vector<double> axis(nx, 0.0);
  for (auto c : cells)
    for (int j = 0; j < kSub; ++j) axis[static_cast<std::size_t>(c) * kSub + j] = 1.0;

  std::vector<double> spacing{hx};
  std::vector<double> origin{0.5 * hx};
  std::vector<std::size_t> shape{nx};
  for (int a = 0; a < d - 1; ++a) {
    spacing.push_back(ball.spacing(a));
    origin.push_back(ball.origin()[a]);
    shape.push_back(ball.shape()[a]);
  }
  const std::size_t inner = ball.size();
  std::vector<double> values(nx * inner, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    if (axis[i] == 0.0) continue;
    std::copy(ball.values().begin(), ball.values().end(), values.begin() + i * inner);
  }
  CantorTimesBall out;
  out.measure = GridMeasure(std::move(spacing), std::move(origin), std::move(shape), std::move(values));
  out.measure.normalize(1.0);
  out.base = base;
  out.digits = digits;
  out.cantor_dimension = std::log(static_cast<double>(digits.size())) / std::log(static_cast<double>(base));
  out.delta = delta;
  return out;
}

// ---------------------------------------------------------------------------
// Sharpness construction

double SharpnessParams::delta() const { return std::ldexp(1.0, -k); }

std::size_t SharpnessParams::tube_count() const {
  const double raw = 0.5 * std::pow(delta(), -eta());
  return static_cast<std::size_t>(std::max(1.0, std::ceil(raw - 1e-9)));
}

// ---------------------------------------------------------------------------
// Random instances

PointCloud gen_random_dyadic_set(int d, double t, int k, std::uint64_t seed) {
  require(d >= 1 && d <= kMaxDim, "dimension out of range");
  require(t >= 0.0 && t <= d, "need 0 <= t <= d");
  require(k >= 0 && k <= 20, "level out of range");
  const double branching = std::exp2(t);
  const auto base_keep = static_cast<std::size_t>(std::floor(branching));
  const double extra = branching - static_cast<double>(base_keep);
  const std::size_t children = std::size_t{1} << d;
  Rng rng(derive_seed(seed, kDyadicStream));
  // Cells as integer corners at the current level.
  std::vector<std::array<std::uint32_t, kMaxDim>> cells(1);
  std::vector<std::size_t> order(children);
  for (int level = 0; level < k; ++level) {
    std::vector<std::array<std::uint32_t, kMaxDim>> next;
    for (const auto& cell : cells) {
      std::size_t keep = base_keep + (rng.uniform() < extra ? 1 : 0);
      keep = std::clamp<std::size_t>(keep, 1, children);
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = 0; i < keep; ++i) std::swap(order[i], order[i + rng.below(children - i)]);
      std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
      for (std::size_t i = 0; i < keep; ++i) {
        std::array<std::uint32_t, kMaxDim> child{};
        for (int a = 0; a < d; ++a) child[a] = 2 * cell[a] + ((order[i] >> a) & 1u);
        next.push_back(child);
      }
    }
    cells = std::move(next);
  }
  const double delta = std::ldexp(1.0, -k);
  std::vector<double> coords;
  coords.reserve(cells.size() * static_cast<std::size_t>(d));
  for (const auto& cell : cells)
    for (int a = 0; a < d; ++a) coords.push_back((cell[a] + 0.5) * delta);
  return PointCloud(d, std::move(coords), delta);
}

PlaneFamily gen_random_line_family(std::size_t count, double separation, std::uint64_t seed,
                                   const PointCloud* through) {
  require(separation > 0.0 && separation < 1.0, "separation must be in (0, 1)");
  require(through == nullptr || (through->dim() == 2 && through->size() >= 2),
          "lines through points need a planar cloud with two points");
  Rng rng(derive_seed(seed, kLineStream));
  // Lines as (theta in [0, pi), rho) with direction (cos, sin) and offset
  // rho * (-sin, cos). For two such lines d_A >= |sin(dtheta)|, so only
  // angle bins next to each other can be closer than the separation.
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::floor(std::numbers::pi / std::asin(separation))));
  const double bin_width = std::numbers::pi / static_cast<double>(bins);
  std::vector<std::vector<std::pair<double, double>>> by_bin(bins);
  auto far_enough = [&](double th, double rho) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>(th / bin_width));
    const std::size_t reach = std::min<std::size_t>(bins, 3);
    for (std::size_t k = 0; k < reach; ++k) {
      for (const auto& [th2, rho2] : by_bin[(b + bins - 1 + k) % bins]) {
        const double dist = std::abs(std::sin(th - th2)) + std::hypot(-rho * std::sin(th) + rho2 * std::sin(th2),
                                                                      rho * std::cos(th) - rho2 * std::cos(th2));
        if (dist < separation) return false;
      }
    }
    return true;
  };
  PlaneFamily family;
  family.separation = separation;
  for (std::size_t attempt = 0; attempt < 20 * count && family.size() < count; ++attempt) {
    double th = 0.0, rho = 0.0;
    if (through != nullptr) {
      const auto i = rng.below(through->size());
      auto j = rng.below(through->size() - 1);
      if (j >= i) ++j;
      const auto p = through->point(i), q = through->point(j);
      th = std::atan2(q[1] - p[1], q[0] - p[0]);
      if (th < 0.0) th += std::numbers::pi;
      if (th >= std::numbers::pi) th -= std::numbers::pi;
      rho = -std::sin(th) * p[0] + std::cos(th) * p[1];
    } else {
      // Uniform angle, offset uniform over the range meeting the unit square.
      th = std::numbers::pi * rng.uniform();
      const double n0 = -std::sin(th), n1 = std::cos(th);
      const double lo = std::min({0.0, n0, n1, n0 + n1}), hi = std::max({0.0, n0, n1, n0 + n1});
      rho = rng.uniform(lo, hi);
    }
    if (!far_enough(th, rho)) continue;
    by_bin[std::min(bins - 1, static_cast<std::size_t>(th / bin_width))].emplace_back(th, rho);
    family.planes.push_back(line_at_angle(th, rho));
  }
  return family;
}

SharpnessInstance gen_sharpness_construction(const SharpnessParams& params) {
  require(params.s >= 0.0 && params.s <= 1.0, "s must be in [0, 1]");
  require(params.t >= 1.0 && params.t <= 2.0, "t must be in [1, 2]");
  require(params.k >= 4, "k must be at least 4");
  require(params.net_constant > 0.0 && params.net_constant <= 1.0, "net constant must be in (0, 1]");
  const double delta = params.delta();
  const double s = params.s;
  const double t = params.t;
  const double eta = params.eta();
  const double width = std::pow(delta, 1.0 - s);
  const std::size_t n_tubes = params.tube_count();

  SharpnessInstance inst;
  inst.params = params;

  // Tubes: band i starts at i / |C|.
  for (std::size_t i = 0; i < n_tubes; ++i) {
    const double y0 = static_cast<double>(i) / static_cast<double>(n_tubes);
    inst.tubes.push_back(Tube{0.0, 1.0, y0, y0 + width});
  }
  require(inst.tubes.back().y1 <= 1.0 + 1e-12, "tubes do not fit in the unit square");

  // Points: rows spaced delta inside each band, columns evenly spread in [0,1].
  const auto rows = static_cast<std::size_t>(std::floor(std::pow(delta, -s) + 1e-9));
  const auto cols = static_cast<std::size_t>(std::ceil(std::pow(delta, -t + eta + s) - 1e-9));
  require(rows >= 1 && cols >= 1, "parameters leave a tube without points");
  inst.rows_per_tube = rows;
  inst.columns_per_tube = cols;
  std::vector<double> coords;
  coords.reserve(n_tubes * rows * cols * 2);
  for (std::size_t i = 0; i < n_tubes; ++i)
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        coords.push_back((static_cast<double>(c) + 0.5) / static_cast<double>(cols));
        coords.push_back(inst.tubes[i].y0 + (static_cast<double>(r) + 0.5) * delta);
        inst.point_tube.push_back(i);
      }
  inst.points = PointCloud(2, std::move(coords), delta);

  // Directions: chord-spaced delta-net of the arc B(e1, width) on S^1, one
  // direction at the centre of each step-long cell.
  const double step = 2.0 * std::asin(0.5 * delta);
  const double arc = 2.0 * std::asin(std::min(1.0, 0.5 * width));
  const auto half = std::max<std::int64_t>(1, std::llround(arc / step));
  for (std::int64_t j = -half; j < half; ++j)
    inst.direction_angles.push_back((static_cast<double>(j) + 0.5) * step);

  // Lines: per tube and direction, normal offsets stepped by c*delta across
  // the range of lines meeting the tube; merged per direction so the whole
  // family stays c*delta-separated.
  const double spacing = params.net_constant * delta;
  struct Candidate {
    double rho;
    std::size_t tube;
  };
  struct Kept {
    std::size_t tube, dir;
    double rho;
  };
  std::vector<Kept> kept;
  for (std::size_t di = 0; di < inst.direction_angles.size(); ++di) {
    const double th = inst.direction_angles[di];
    const double nx = -std::sin(th), ny = std::cos(th);
    std::vector<Candidate> cand;
    for (std::size_t i = 0; i < n_tubes; ++i) {
      const Tube& tb = inst.tubes[i];
      const std::array<double, 4> proj{tb.x0 * nx + tb.y0 * ny, tb.x1 * nx + tb.y0 * ny,
                                       tb.x0 * nx + tb.y1 * ny, tb.x1 * nx + tb.y1 * ny};
      const double lo = *std::min_element(proj.begin(), proj.end());
      const double hi = *std::max_element(proj.begin(), proj.end());
      // Cell-centred, rounded count: every line meeting the tube is within one
      // spacing of a net line.
      const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround((hi - lo) / spacing)));
      const double mid = 0.5 * (lo + hi);
      for (std::size_t j = 0; j < count; ++j)
        cand.push_back({mid + (static_cast<double>(j) - 0.5 * static_cast<double>(count - 1)) * spacing, i});
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [](const Candidate& a, const Candidate& b) { return a.rho < b.rho; });
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& c : cand) {
      if (c.rho - last < spacing * (1.0 - 1e-12)) continue;
      kept.push_back({c.tube, di, c.rho});
      last = c.rho;
    }
  }
  std::stable_sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
    if (a.tube != b.tube) return a.tube < b.tube;
    if (a.dir != b.dir) return a.dir < b.dir;
    return a.rho < b.rho;
  });
  for (const auto& k : kept) {
    inst.lines.planes.push_back(line_at_angle(inst.direction_angles[k.dir], k.rho));
    inst.line_tube.push_back(k.tube);
    inst.line_direction.push_back(k.dir);
  }
  inst.lines.separation = std::min(spacing, inst.direction_angles.size() > 1 ? std::sin(step) : spacing);
  return inst;
}

}  // namespace fraclab
