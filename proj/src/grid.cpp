#include "amfc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amfc/error.hpp"

namespace amfc {

SpaceGrid::SpaceGrid(int nx) : nx_(nx), dx_(1.0 / (nx + 1)) {
  if (nx < 1) throw DomainError("SpaceGrid: nx must be >= 1");
}

std::vector<double> SpaceGrid::nodes() const {
  std::vector<double> x(static_cast<std::size_t>(size()));
  for (int i = 0; i < size(); ++i) x[static_cast<std::size_t>(i)] = node(i);
  return x;
}

int SpaceGrid::nearest(double x) const {
  const double s = x / dx_;
  int i = static_cast<int>(std::floor(s));
  if (s - i > 0.5) ++i;
  return std::clamp(i, 0, nx_ + 1);
}

TimeGrid::TimeGrid(double t0, double T, int nt) : t0_(t0), T_(T), nt_(nt), dt_((T - t0) / nt) {
  if (nt < 1) throw DomainError("TimeGrid: nt must be >= 1");
  if (!(dt_ > 0.0)) throw DomainError("TimeGrid: requires T > t0");
}

TimeGrid TimeGrid::tail(int k0) const {
  if (k0 < 0 || k0 >= nt_) throw DomainError("TimeGrid::tail: k0 out of range");
  return TimeGrid(time(k0), T_, nt_ - k0);
}

double trapezoid_mass(std::span<const double> values, double dx) {
  // Boundary nodes carry zero weight for densities.
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
  return s * dx;
}

GridDensity::GridDensity(const SpaceGrid& grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.size()), 0.0) {}

GridDensity::GridDensity(const SpaceGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(grid_.size()))
    throw InvariantViolation("GridDensity: value count does not match grid");
  if (std::abs(values_.front()) > kSignTolerance || std::abs(values_.back()) > kSignTolerance)
    throw InvariantViolation("GridDensity: nonzero boundary value");
  values_.front() = 0.0;
  values_.back() = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v) || v < -kSignTolerance) {
      std::ostringstream os;
      os << "GridDensity: invalid value " << v;
      throw InvariantViolation(os.str());
    }
  }
  const double m = mass();
  if (m > 1.0 + kMassTolerance) {
    std::ostringstream os;
    os << "GridDensity: mass " << m << " exceeds one";
    throw InvariantViolation(os.str());
  }
}

GridDensity GridDensity::from_function(const SpaceGrid& grid,
                                       const std::function<double(double)>& f) {
  std::vector<double> v(static_cast<std::size_t>(grid.size()), 0.0);
  for (int i = 1; i <= grid.nx(); ++i) v[static_cast<std::size_t>(i)] = f(grid.node(i));
  return GridDensity(grid, std::move(v));
}

double GridDensity::mass() const { return trapezoid_mass(values_, grid_.dx()); }

double GridDensity::integrate(const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (int i = 1; i <= grid_.nx(); ++i) s += values_[static_cast<std::size_t>(i)] * phi(grid_.node(i));
  return s * grid_.dx();
}

double GridDensity::l2_norm_squared() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return s * grid_.dx();
}

EmpiricalConfig::EmpiricalConfig(int denom, std::vector<double> points)
    : denom_(denom), points_(std::move(points)) {
  if (denom_ < 1) throw DomainError("EmpiricalConfig: denominator must be positive");
  if (points_.size() > static_cast<std::size_t>(denom_))
    throw DomainError("EmpiricalConfig: more points than the denominator");
  for (double x : points_) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("EmpiricalConfig: point outside [0,1]");
  }
}

int EmpiricalConfig::alive_count() const {
  int k = 0;
  for (std::size_t i = 0; i < points_.size(); ++i) k += alive(i) ? 1 : 0;
  return k;
}

std::vector<double> EmpiricalConfig::alive_points() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (alive(i)) out.push_back(points_[i]);
  return out;
}

double EmpiricalConfig::integrate(const std::function<double(double)>& phi) const {
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    if (alive(i)) s += phi(points_[i]);
  return s / denom_;
}

}  // namespace amfc
