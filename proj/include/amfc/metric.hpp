#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amfc/grid.hpp"

namespace amfc {

/// Distance to the boundary of (0,1): min(x, 1 - x).
double dist_boundary(double x);

/// Point pseudometric with the boundary collapsed to a single point:
/// rho(x, y) = sup over 1-Lipschitz phi vanishing on the boundary of phi(x) - phi(y),
/// which on the interval equals min(|x - y|, d(x) + d(y)).
double rho(double x, double y);

struct LpSolution {
  double value = 0.0;       // primal optimum (min-cost flow)
  double dual_value = 0.0;  // sum phi_i (m_i - n_i) dx at the recovered potential
  std::vector<double> potential;  // optimal phi on the nodes, zero on the boundary
  int iterations = 0;
};

/// Reference value of d(m, n): maximize sum_i phi_i (m_i - n_i) dx over grid
/// functions with phi = 0 on the boundary and |phi_{i+1} - phi_i| <= dx.
///
/// Solved through its dual, an uncapacitated min-cost flow on the cycle
/// formed by the interior nodes and the (collapsed) boundary node, by
/// successive shortest paths with Dijkstra. Throws SolverError if the
/// augmentation count exceeds its bound.
LpSolution metric_d_lp_solve(const GridDensity& m, const GridDensity& n);
double metric_d_lp(const GridDensity& m, const GridDensity& n);

/// The same quantity through the one-dimensional reduction
/// min over lambda of sum_j |S_j + lambda| dx, S_j the tail mass of m - n
/// beyond face j; lambda is minus a median of the S_j.
double metric_d_fast(std::span<const double> m, std::span<const double> n, double dx);
double metric_d_fast(const GridDensity& m, const GridDensity& n);

/// Correctly rounded sum of the terms (exact summation, one final rounding).
double exact_sum(std::span<const double> terms);

/// Exact minimum-cost assignment (Hungarian method with potentials).
/// Returns the optimal total cost (an exact_sum of the matched entries); `assignment[i]` is the column matched to row i.
double min_cost_assignment(const std::vector<std::vector<double>>& cost,
                           std::vector<int>* assignment = nullptr);

/// rho-matching distance between empirical measures with a common denominator:
/// both configs are padded to N atoms with boundary-class atoms and the
/// minimal average matching cost is returned. The optimal matching's cost is
/// summed exactly from its signed terms, so matchings of equal real cost give
/// the same double. N must not exceed 64.
double metric_d_rho_empirical(const EmpiricalConfig& a, const EmpiricalConfig& b);

/// Alive points of a config followed by NaN markers for the boundary class, N slots in total.
std::vector<double> padded_points(const EmpiricalConfig& c);

/// rho(x, y) written as a signed sum of the inputs and the constant 1
/// (NaN marks the boundary class), so that matching costs can be summed exactly.
void append_rho_terms(double x, double y, std::vector<double>& out);

/// Pairwise cost matrix used by metric_d_rho_empirical (boundary class padded).
std::vector<std::vector<double>> rho_cost_matrix(const EmpiricalConfig& a,
                                                 const EmpiricalConfig& b);

/// Alive atoms of a config placed as point masses at the nearest node of `grid`.
GridDensity atoms_on_grid(const EmpiricalConfig& a, const SpaceGrid& grid);

struct MetricComparison {
  double d_rho = 0.0;
  double d_val = 0.0;
  double slack = 0.0;
  bool sandwich_ok = false;
};

/// d_rho by matching and d(a|_Omega, b|_Omega) by the LP on a fine grid, with
/// the check (1/2) d - 2 dx <= d_rho <= d + 2 dx.
MetricComparison compare_metrics(const EmpiricalConfig& a, const EmpiricalConfig& b,
                                 const SpaceGrid& fine_grid);

/// Smooth even bump supported in [-kappa, kappa] with unit integral
/// (the standard exp(-1/(1-r^2)) profile rescaled).
class Mollifier {
 public:
  explicit Mollifier(double kappa);

  double kappa() const { return kappa_; }
  double operator()(double x) const;
  double derivative(double x) const;

 private:
  double kappa_;
  double scale_;  // normalization / kappa
};

struct MollifiedDensity {
  GridDensity density;
  double deviation_bound;  // d(density, a) <= deviation_bound
};

/// Convolution of the alive atoms with the mollifier, sampled on `grid`.
/// Each atom's stencil is normalized to mass 1/N over the infinite lattice and
/// then truncated to the interior, so the result never gains mass.
/// Throws DomainError if kappa < 2 dx.
MollifiedDensity mollify_empirical(const EmpiricalConfig& a, double kappa, const SpaceGrid& grid);

struct ProjectionDerivatives {
  double psi = 0.0;
  std::vector<double> grads;
  std::vector<double> laps;
  double lap_sum = 0.0;
};

/// Psi(x) = || m_x * rho_kappa ||_2^2 over the line with its per-particle
/// gradients and Laplacians:
///   D_i Psi = (2/N) (D rho * rho * m)(x^i),
///   Lap_i Psi = (2/N) (D rho * D rho * m)(x^i) + (2/N^2) ||D rho||^2,
///   sum_i Lap_i Psi = -2 ||D rho * m||^2 + (2K/N^2) ||D rho||^2,
/// each integral computed by composite Gauss-Legendre quadrature.
/// Throws DomainError if any atom is on the boundary.
ProjectionDerivatives projected_l2_derivatives(const EmpiricalConfig& a, double kappa);

/// Psi alone (used as the finite-difference reference).
double projected_l2(const EmpiricalConfig& a, double kappa);

}  // namespace amfc
