#pragma once

#include <span>
#include <vector>

#include "amfc/grid.hpp"

namespace amfc {

class ModelSpec;

/// Drift alpha(t_k, x_i) on a time-space grid, stored row-major by time node.
class DriftField {
 public:
  DriftField(const SpaceGrid& sg, const TimeGrid& tg, std::vector<double> values);
  static DriftField constant(const SpaceGrid& sg, const TimeGrid& tg, double value);

  const SpaceGrid& space() const { return sg_; }
  const TimeGrid& time() const { return tg_; }
  double at(int k, int i) const { return values_[index(k, i)]; }
  std::span<const double> slice(int k) const;
  /// sup |alpha|.
  double bound() const { return bound_; }

 private:
  std::size_t index(int k, int i) const {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(sg_.size()) +
           static_cast<std::size_t>(i);
  }

  SpaceGrid sg_;
  TimeGrid tg_;
  std::vector<double> values_;
  double bound_ = 0.0;
};

/// Density path m(t_k) on a time grid.
struct FPPath {
  TimeGrid time;
  std::vector<GridDensity> densities;
  std::vector<double> masses;
  double clamped_mass = 0.0;  // mass of tiny negative values reset to zero

  const GridDensity& at(int k) const { return densities[static_cast<std::size_t>(k)]; }
};

/// Semi-implicit finite-volume solve of d_t m = Lap m - div(m alpha) with
/// m = 0 on the boundary. Each step applies explicit upwind face fluxes
/// (face velocity = mean of the two nodal drifts) and then an implicit heat
/// step. Requires dt <= dx / (2 sup|alpha|); throws CflError otherwise and
/// SolverError if a value drops below -1e-12.
FPPath solve_fp(const GridDensity& m0, const DriftField& alpha, const TimeGrid& tg);

/// Backward dual of solve_fp: f(T) = phi_T and f^k = A_k^T D^{-1} f^{k+1},
/// where m^{k+1} = D^{-1} A_k m^k is the forward step. This discretizes
/// d_t f + Lap f + alpha . Df = 0, f = 0 on the boundary, and makes
/// sum_i f^k_i m^k_i invariant along any forward path with the same drift.
std::vector<std::vector<double>> solve_backward_transport(std::span<const double> phi_T,
                                                          const DriftField& alpha,
                                                          const TimeGrid& tg);

/// |LHS - RHS| of the discrete energy identity
///   ||m_T||^2 - ||m_0||^2 = -2 int |Dm|^2 + 2 int m alpha . Dm,
/// with face differences in space and the trapezoidal rule in time.
double l2_energy_residual(const FPPath& path, const DriftField& alpha);

/// max_i |f_{i+1} - f_i| / dx over all faces.
double max_abs_gradient(std::span<const double> f, double dx);

/// Running cost int_t0^T [ int L(x, alpha) m_t dx + F(m_t) ] dt + G(m_T), trapezoidal in time and space.
double evaluate_cost(const FPPath& m_path, const DriftField& alpha, const ModelSpec& model);

/// Same on the first `steps` time steps, without the terminal term.
double running_cost(const FPPath& m_path, const DriftField& alpha, const ModelSpec& model,
                    int steps);

}  // namespace amfc
