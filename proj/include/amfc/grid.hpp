#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace amfc {

/// Uniform grid on the closed unit interval: nodes x_i = i*dx, i = 0..nx+1.
/// Nodes 0 and nx+1 are the boundary of the domain (0,1).
class SpaceGrid {
 public:
  explicit SpaceGrid(int nx);

  int nx() const { return nx_; }
  int size() const { return nx_ + 2; }
  double dx() const { return dx_; }
  double node(int i) const { return i == nx_ + 1 ? 1.0 : i * dx_; }
  bool is_boundary(int i) const { return i == 0 || i == nx_ + 1; }
  std::vector<double> nodes() const;

  /// Index of the node nearest to x (ties go to the lower node).
  int nearest(double x) const;

  bool operator==(const SpaceGrid& other) const { return nx_ == other.nx_; }

 private:
  int nx_;
  double dx_;
};

class TimeGrid {
 public:
  TimeGrid(double t0, double T, int nt);

  double t0() const { return t0_; }
  double T() const { return T_; }
  int nt() const { return nt_; }
  double dt() const { return dt_; }
  double time(int k) const { return k == nt_ ? T_ : t0_ + k * dt_; }

  /// Sub-grid [time(k0), T] with the same step.
  TimeGrid tail(int k0) const;

 private:
  double t0_;
  double T_;
  int nt_;
  double dt_;
};

/// Discrete sub-probability measure: a nonnegative density sampled at the
/// nodes of a SpaceGrid, zero on the boundary, trapezoidal mass at most one.
class GridDensity {
 public:
  static constexpr double kMassTolerance = 1e-12;
  static constexpr double kSignTolerance = 1e-14;

  explicit GridDensity(const SpaceGrid& grid);
  /// Throws InvariantViolation if the values do not describe a sub-probability density.
  GridDensity(const SpaceGrid& grid, std::vector<double> values);

  static GridDensity from_function(const SpaceGrid& grid, const std::function<double(double)>& f);
  static GridDensity zero(const SpaceGrid& grid) { return GridDensity(grid); }

  const SpaceGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }

  double mass() const;
  double integrate(const std::function<double(double)>& phi) const;
  double l2_norm_squared() const;

 private:
  SpaceGrid grid_;
  std::vector<double> values_;
};

/// Trapezoidal mass of a node vector that vanishes on the boundary.
double trapezoid_mass(std::span<const double> values, double dx);

/// Empirical measure (1/N) * sum of Dirac masses at the alive points.
/// Points on the boundary are absorbed (dead) and carry no mass.
class EmpiricalConfig {
 public:
  EmpiricalConfig(int denom, std::vector<double> points);

  int denom() const { return denom_; }
  std::span<const double> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool alive(std::size_t i) const { return points_[i] > 0.0 && points_[i] < 1.0; }
  int alive_count() const;
  double mass() const { return static_cast<double>(alive_count()) / denom_; }
  std::vector<double> alive_points() const;
  double integrate(const std::function<double(double)>& phi) const;

 private:
  int denom_;
  std::vector<double> points_;
};

}  // namespace amfc
