#include "amfc/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/hierarchy.hpp"
#include "amfc/metric.hpp"

namespace amfc {

double BarrierPair::psi(double r) const {
  return std::log(std::sin(delta + Cp * r) / std::sin(delta)) / Cp;
}

double BarrierPair::psi_prime(double r) const { return 1.0 / std::tan(delta + Cp * r); }

double BarrierPair::plus(double x) const { return psi(dist_boundary(x)); }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Smallest slope (largest delta) with psi(eps) > 1.01 C, or delta = 0 when infeasible.
double choose_delta(double C, double Cp, double eps) {
  const double top = std::numbers::pi / 2 - std::atan(C) - Cp * eps;
  const double hi_cap = std::min(top, std::atan(1.0 / (2.0 * C)));
  if (!(hi_cap > 0.0)) return 0.0;
  auto psi_eps = [&](double d) { return std::log(std::sin(d + Cp * eps) / std::sin(d)) / Cp; };
  const double goal = 1.01 * C;
  if (psi_eps(hi_cap) > goal) return hi_cap;
  double lo = 1e-300, hi = hi_cap;
  if (!(psi_eps(lo) > goal)) return 0.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = hi / lo > 10.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (psi_eps(mid) > goal) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return lo;
}

void tabulate(BarrierPair& bp) {
  const SpaceGrid& sg = bp.grid;
  bp.phi_plus.assign(static_cast<std::size_t>(sg.size()), kNaN);
  bp.phi_minus.assign(static_cast<std::size_t>(sg.size()), kNaN);
  bp.collar_nodes = 0;
  bp.violations = 0;
  bp.worst_residual = -std::numeric_limits<double>::infinity();
  const double dx = sg.dx();
  for (int i = 0; i < sg.size(); ++i) {
    const double d = dist_boundary(sg.node(i));
    if (d < bp.epsilon) {
      bp.phi_plus[static_cast<std::size_t>(i)] = bp.psi(d);
      bp.phi_minus[static_cast<std::size_t>(i)] = -bp.psi(d);
    }
  }
  for (int i = 1; i <= sg.nx(); ++i) {
    if (!(dist_boundary(sg.node(i)) < bp.epsilon)) continue;
    ++bp.collar_nodes;
    const double a = bp.plus(sg.node(i - 1)), b = bp.plus(sg.node(i)), c = bp.plus(sg.node(i + 1));
    const double lap = (a - 2 * b + c) / (dx * dx);
    const double grad = (c - a) / (2 * dx);
    const double r = lap + bp.C * (1 + grad * grad);
    bp.worst_residual = std::max(bp.worst_residual, r);
    if (!(r <= 0.0)) ++bp.violations;
  }
}

}  // namespace

BarrierPair build_barrier(double C, const SpaceGrid& sg) {
  if (!(C > 0.0)) throw DomainError("build_barrier: C must be positive");
  std::ostringstream diag;
  for (double eta : {0.25, 0.5, 1.0, 2.0}) {
    for (double frac : {0.9, 0.5}) {
      BarrierPair bp;
      bp.C = C;
      bp.eta = eta;
      bp.Cp = C * (1.0 + eta);
      bp.epsilon = std::min(frac * (std::numbers::pi / 2 - std::atan(C)) / bp.Cp, 0.25);
      bp.delta = choose_delta(C, bp.Cp, bp.epsilon);
      bp.grid = sg;
      if (!(bp.delta > 0.0)) {
        diag << " [eta=" << eta << " frac=" << frac << ": no admissible slope]";
        continue;
      }
      bp.s = 1.0 / std::tan(bp.delta);
      tabulate(bp);
      if (bp.collar_nodes == 0) {
        diag << " [eta=" << eta << " frac=" << frac << ": collar width " << bp.epsilon
             << " holds no interior node]";
        continue;
      }
      if (bp.violations == 0) return bp;
      diag << " [eta=" << eta << " frac=" << frac << ": " << bp.violations << " of " << bp.collar_nodes
           << " nodes violate, worst " << bp.worst_residual << "]";
    }
  }
  throw SolverError("build_barrier: no verified barrier for C = " + std::to_string(C) +
                    " at nx = " + std::to_string(sg.nx()) + ":" + diag.str());
}

BarrierDiagnostics barrier_diagnostics(const BarrierPair& bp) {
  BarrierDiagnostics d;
  const SpaceGrid& sg = bp.grid;
  const double dx = sg.dx();
  d.max_second_difference = -std::numeric_limits<double>::infinity();
  for (double r = dx; r + dx <= bp.epsilon; r += dx)
    d.max_second_difference = std::max(d.max_second_difference, bp.psi(r - dx) - 2 * bp.psi(r) + bp.psi(r + dx));
  d.min_excess_over_Cd = std::numeric_limits<double>::infinity();
  d.mirrored_residual = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < sg.size(); ++i) {
    const double x = sg.node(i);
    const double dist = dist_boundary(x);
    if (!(dist < bp.epsilon)) continue;
    d.min_excess_over_Cd = std::min(d.min_excess_over_Cd, bp.plus(x) - bp.C * dist);
    if (i == 0 || i == sg.nx() + 1) continue;
    const double a = bp.minus(sg.node(i - 1)), b = bp.minus(x), c = bp.minus(sg.node(i + 1));
    const double lap = (a - 2 * b + c) / (dx * dx);
    const double grad = (c - a) / (2 * dx);
    d.mirrored_residual = std::max(d.mirrored_residual, bp.C * (1 + grad * grad) - lap);
  }
  d.inner_value = bp.psi(bp.epsilon);
  d.min_slope = bp.psi_prime(bp.epsilon);
  return d;
}

double max_verifiable_C(const SpaceGrid& sg) {
  double best = 0.0;
  for (double C = 0.5; C < 1e4; C *= 1.25) {
    try {
      build_barrier(C, sg);
      best = C;
    } catch (const SolverError&) {
      break;
    }
  }
  return best;
}

namespace {

bool next_tuple(std::vector<int>& idx, int n) {
  for (std::size_t j = idx.size(); j-- > 0;) {
    if (++idx[j] < n) return true;
    idx[j] = 0;
  }
  return false;
}

std::size_t drop_flat(const std::vector<int>& idx, int drop, int n) {
  std::size_t f = 0;
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (static_cast<int>(j) != drop) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[j]);
  return f;
}

}  // namespace

SandwichReport verify_sandwich(const HierarchySolution& sol, const BarrierPair& bp) {
  const SpaceGrid& sg = sol.space();
  const int n = sg.size();
  const double invN = 1.0 / std::max(sol.N(), 1);
  SandwichReport rep;
  rep.worst_violation = 0.0;
  for (int K = 1; K <= sol.N(); ++K) {
    for (int j = 0; j < sol.layers(); ++j) {
      const auto hi = sol.layer(K, j), lo = sol.layer(K - 1, j);
      std::vector<int> idx(static_cast<std::size_t>(K), 0);
      std::size_t f = 0;
      do {
        for (int i = 0; i < K; ++i) {
          const int c = idx[static_cast<std::size_t>(i)];
          const double x = sg.node(c);
          if (!(dist_boundary(x) < bp.epsilon)) continue;
          const double base = lo[drop_flat(idx, i, n)];
          const double phi = bp.plus(x);
          const double v = hi[f];
          rep.worst_violation = std::max({rep.worst_violation, v - base - invN * phi, base - invN * phi - v});
          ++rep.checked;
          if (!sg.is_boundary(c)) ++rep.checked_interior;
        }
        ++f;
      } while (next_tuple(idx, n));
    }
  }
  return rep;
}

double SandwichConstants::max() const { return std::max({C1, C2, C3}); }

SandwichConstants measure_sandwich_constants(const HierarchySolution& sol) {
  SandwichConstants out;
  const SpaceGrid& sg = sol.space();
  const ModelSpec& model = sol.model();
  const int N = sol.N();
  const int n = sg.size();
  out.C2 = check_crude_bound(sol);

  double h_ratio = 0.0;
  for (int i = 0; i < sg.size(); ++i) {
    for (int k = -400; k <= 400; ++k) {
      const double q = 0.125 * k;
      h_ratio = std::max(h_ratio, std::abs(model.truncated_hamiltonian(sg.node(i), q, sol.R())) / (1 + q * q));
    }
  }
  double dF = 0.0, dG = 0.0;
  for (int K = 1; K <= N; ++K) {
    std::vector<int> idx(static_cast<std::size_t>(K), 0);
    std::vector<double> pts(static_cast<std::size_t>(K));
    do {
      for (int j = 0; j < K; ++j) pts[static_cast<std::size_t>(j)] = sg.node(idx[static_cast<std::size_t>(j)]);
      const EmpiricalConfig full(N, pts);
      const double F = model.running().value(full), G = model.terminal().value(full);
      for (int i = 0; i < K; ++i) {
        std::vector<double> red = pts;
        red.erase(red.begin() + i);
        const EmpiricalConfig reduced(N, red);
        dF = std::max(dF, N * std::abs(F - model.running().value(reduced)));
        const double d = dist_boundary(pts[static_cast<std::size_t>(i)]);
        if (d > 0.0) dG = std::max(dG, N * std::abs(G - model.terminal().value(reduced)) / d);
      }
    } while (next_tuple(idx, n));
  }
  out.C1 = h_ratio + dF;
  out.C3 = dG;
  return out;
}

}  // namespace amfc
