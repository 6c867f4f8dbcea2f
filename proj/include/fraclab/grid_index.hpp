#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Uniform bucket grid over the bounding box of a point cloud. Points are
/// stored cell by cell (CSR), ascending by index inside each cell.
class GridIndex {
 public:
  GridIndex(const PointCloud& cloud, double cell_size)
      : cloud_(&cloud), dim_(cloud.dim()) {
    lo_.assign(dim_, 0.0);
    std::vector<double> hi(dim_, 0.0);
    const std::size_t n = cloud.size();
    if (n > 0) {
      for (int a = 0; a < dim_; ++a) lo_[a] = hi[a] = cloud.point(0)[a];
      for (std::size_t i = 1; i < n; ++i) {
        auto p = cloud.point(i);
        for (int a = 0; a < dim_; ++a) {
          lo_[a] = std::min(lo_[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
    }
    // Keep the dense cell array proportional to the point count.
    cell_ = cell_size;
    const double budget = 8.0 * static_cast<double>(n) + 1.0e6;
    for (;;) {
      double cells = 1.0;
      for (int a = 0; a < dim_; ++a) cells *= std::floor((hi[a] - lo_[a]) / cell_) + 1.0;
      if (cells <= budget) break;
      cell_ *= 1.5;
    }
    shape_.assign(dim_, 1);
    for (int a = 0; a < dim_; ++a)
      shape_[a] = static_cast<std::int64_t>(std::floor((hi[a] - lo_[a]) / cell_)) + 1;
    std::int64_t total = 1;
    for (auto s : shape_) total *= s;

    std::vector<std::int64_t> cell_of(n);
    start_.assign(static_cast<std::size_t>(total) + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      cell_of[i] = linear_cell(cloud.point(i));
      ++start_[static_cast<std::size_t>(cell_of[i]) + 1];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(total); ++c) start_[c + 1] += start_[c];
    order_.resize(n);
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i)
      order_[fill[static_cast<std::size_t>(cell_of[i])]++] = static_cast<std::uint32_t>(i);
  }

  int dim() const { return dim_; }
  double cell_size() const { return cell_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<std::int64_t>& shape() const { return shape_; }

  std::int64_t cell_coord(double x, int axis) const {
    return static_cast<std::int64_t>(std::floor((x - lo_[axis]) / cell_));
  }

  /// Points stored in the cell with the given linear index.
  std::span<const std::uint32_t> cell_points(std::int64_t linear) const {
    const auto b = start_[static_cast<std::size_t>(linear)];
    const auto e = start_[static_cast<std::size_t>(linear) + 1];
    return {order_.data() + b, e - b};
  }

  std::int64_t linear_index(std::span<const std::int64_t> coord) const {
    std::int64_t idx = 0;
    for (int a = 0; a < dim_; ++a) idx = idx * shape_[a] + coord[a];
    return idx;
  }

  /// Calls f(index) for every point within closed distance r of `center`.
  template <class F>
  void for_each_in_ball(std::span<const double> center, double r, F&& f) const {
    std::array<std::int64_t, kMaxDim> lo{}, hi{}, cur{};
    for (int a = 0; a < dim_; ++a) {
      lo[a] = std::max<std::int64_t>(0, cell_coord(center[a] - r, a));
      hi[a] = std::min<std::int64_t>(shape_[a] - 1, cell_coord(center[a] + r, a));
      if (lo[a] > hi[a]) return;
      cur[a] = lo[a];
    }
    const double r2 = r * r;
    for (;;) {
      for (auto i : cell_points(linear_index({cur.data(), static_cast<std::size_t>(dim_)}))) {
        auto p = cloud_->point(i);
        double s = 0.0;
        for (int a = 0; a < dim_; ++a) {
          const double diff = p[a] - center[a];
          s += diff * diff;
        }
        if (s <= r2) f(i);
      }
      int a = dim_ - 1;
      while (a >= 0 && cur[a] == hi[a]) {
        cur[a] = lo[a];
        --a;
      }
      if (a < 0) break;
      ++cur[a];
    }
  }

  /// True when some point lies within closed distance r of `center`.
  bool any_in_ball(std::span<const double> center, double r) const {
    bool found = false;
    for_each_in_ball(center, r, [&](std::uint32_t) { found = true; });
    return found;
  }

 private:
  std::int64_t linear_cell(std::span<const double> p) const {
    std::int64_t idx = 0;
    for (int a = 0; a < dim_; ++a) {
      const auto c = std::clamp<std::int64_t>(cell_coord(p[a], a), 0, shape_[a] - 1);
      idx = idx * shape_[a] + c;
    }
    return idx;
  }

  const PointCloud* cloud_;
  int dim_;
  double cell_ = 1.0;
  std::vector<double> lo_;
  std::vector<std::int64_t> shape_;
  std::vector<std::uint32_t> start_;
  std::vector<std::uint32_t> order_;
};

}  // namespace fraclab
