#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amfc/hierarchy.hpp"

namespace amfc {

struct MonteCarloOptions {
  int nsim = 100000;
  std::uint64_t seed = 1;
  bool bridge = false;  // Brownian-bridge correction of boundary crossings within a step
  int substeps = 4;     // Euler-Maruyama steps per hierarchy time step (>= 4)
  int threads = 1;
};

struct MonteCarloResult {
  double estimate = 0.0;
  double stderr_ = 0.0;
  int nsim = 0;
  double dt = 0.0;  // Euler-Maruyama step
};

/// Pathwise cost of N absorbed particles started at x0 (K <= N coordinates) at
/// time t0 under the feedback a*_R(x^i, N D_{x^i} V^{N,K}) read from the solved
/// hierarchy, averaged over nsim trajectories. Each trajectory draws from its
/// own generator seeded from (seed, trajectory index), so the result does not
/// depend on the thread count. Throws DomainError if nsim < 100.
MonteCarloResult monte_carlo_value(const HierarchySolution& sol, double t0,
                                   std::span<const double> x0, const MonteCarloOptions& opts);

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace amfc
