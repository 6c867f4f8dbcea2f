#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

/// Non-negative density sampled at the nodes origin + i * spacing of a
/// rectangular lattice. Each node carries the mass value * cell_volume().
/// Spacing may differ per axis; most constructions use a single h.
class GridMeasure {
 public:
  GridMeasure() = default;
  GridMeasure(std::vector<double> spacing, std::vector<double> origin,
              std::vector<std::size_t> shape, std::vector<double> values);

  /// Isotropic lattice with zero values.
  static GridMeasure zeros(double h, std::vector<double> origin, std::vector<std::size_t> shape);

  int dim() const { return static_cast<int>(shape_.size()); }
  const std::vector<double>& spacing() const { return spacing_; }
  double spacing(int axis) const { return spacing_[axis]; }
  /// The common spacing; throws if the lattice is anisotropic.
  double h() const;
  bool isotropic() const;
  double cell_volume() const;
  const std::vector<double>& origin() const { return origin_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }

  double total_mass() const;
  /// Rescales values so that total_mass() == target.
  void normalize(double target = 1.0);

  std::size_t linear(std::span<const std::size_t> idx) const;
  /// Multi-index of a linear position (row-major, last axis fastest).
  void unravel(std::size_t linear, std::span<std::size_t> idx) const;
  /// Node coordinates of a linear position.
  void node(std::size_t linear, std::span<double> x) const;

  /// Multilinear interpolation of the density; zero outside the lattice.
  double interpolate(std::span<const double> x) const;

  /// Lower and upper node coordinates along each axis.
  std::vector<double> lower() const { return origin_; }
  std::vector<double> upper() const;

 private:
  std::vector<double> spacing_;
  std::vector<double> origin_;
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
};

/// Density 1 / volume on the box [lo, hi] with node spacing h (nodes at cell
/// centres). Mass 1.
GridMeasure make_uniform_box(std::span<const double> lo, std::span<const double> hi, double h);

/// Uniform probability on the closed ball B(0, radius) in R^d. Node values are
/// cell coverage fractions estimated with `supersample`^d sub-samples, then
/// normalised to mass 1.
GridMeasure make_uniform_ball(int d, double radius, double h, int supersample = 8);

}  // namespace fraclab
