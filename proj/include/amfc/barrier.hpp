#pragma once

#include <vector>

#include "amfc/grid.hpp"

namespace amfc {

class HierarchySolution;

/// psi(r) = int_0^r tan(-C' y + arctan s) dy = ln(sin(delta + C' r) / sin(delta)) / C'
/// with delta = pi/2 - arctan s, and phi^+(x) = psi(d(x)), phi^- = -phi^+ on the
/// collar {d(x) < epsilon}.
struct BarrierPair {
  double C = 0.0;
  double Cp = 0.0;       // curvature constant C' = C (1 + eta)
  double eta = 0.0;
  double s = 0.0;        // slope psi'(0)
  double delta = 0.0;    // pi/2 - arctan s
  double epsilon = 0.0;  // collar width
  SpaceGrid grid{1};
  std::vector<double> phi_plus;   // on the nodes of grid; NaN outside the collar
  std::vector<double> phi_minus;
  int collar_nodes = 0;           // interior nodes with d(x) < epsilon
  int violations = 0;             // nodes where the discrete inequality fails
  double worst_residual = 0.0;    // max of Lap phi^+ + C (1 + |D phi^+|^2) over collar nodes

  double psi(double r) const;
  double psi_prime(double r) const;
  double plus(double x) const;
  double minus(double x) const { return -plus(x); }
};

struct BarrierDiagnostics {
  double max_second_difference = 0.0;  // over [0, epsilon]; <= 0 for concave psi
  double min_excess_over_Cd = 0.0;     // min over collar nodes of phi^+ - C d
  double inner_value = 0.0;            // psi(epsilon), must exceed C
  double min_slope = 0.0;              // psi'(epsilon), must exceed C
  double mirrored_residual = 0.0;      // max over collar nodes of C(1 + |D phi^-|^2) - Lap phi^-
};

/// Builds the barrier for constant C on grid sg. Tries C' = C (1 + eta) for
/// eta in {0.25, 0.5, 1, 2} and epsilon = frac (pi/2 - arctan C) / C' for
/// frac in {0.9, 0.5}; for each, s is the smallest slope (s >= 2C) with
/// psi(epsilon) > 1.01 C. The first candidate without nodewise violations of
/// the discrete inequality is returned. Throws SolverError with diagnostics
/// if none qualifies or if the collar holds no interior node; DomainError if C <= 0.
BarrierPair build_barrier(double C, const SpaceGrid& sg);

BarrierDiagnostics barrier_diagnostics(const BarrierPair& bp);

/// Largest C on a geometric ladder (factor 1.25 from 0.5) for which build_barrier succeeds.
double max_verifiable_C(const SpaceGrid& sg);

struct SandwichReport {
  double worst_violation = 0.0;  // max signed violation of either inequality (0 when only boundary nodes bind)
  long checked = 0;              // (node, coordinate, layer) triples with x^i in the collar
  long checked_interior = 0;     // of which x^i is an interior node
};

/// Checks V^{N,K-1}(x^{-i}) + phi^-(x^i)/N <= V^{N,K}(x) <= V^{N,K-1}(x^{-i}) + phi^+(x^i)/N
/// for K >= 1, stored layers, all nodes and coordinates i with x^i in the
/// closed collar. The barrier grid may differ from the hierarchy grid.
SandwichReport verify_sandwich(const HierarchySolution& sol, const BarrierPair& bp);

/// Empirical versions of the constants the sandwich needs:
/// C1 from the Hamiltonian and running-cost increments, C2 = N max |V^{N,K} - V^{N,K-1}|,
/// C3 = N max |G(m_x) - G(m_{x^-i})| / d(x^i).
struct SandwichConstants {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  double max() const;
};
SandwichConstants measure_sandwich_constants(const HierarchySolution& sol);

}  // namespace amfc
