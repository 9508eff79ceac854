#include "amfc/fp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/model.hpp"
#include "amfc/tridiag.hpp"

namespace amfc {

DriftField::DriftField(const SpaceGrid& sg, const TimeGrid& tg, std::vector<double> values)
    : sg_(sg), tg_(tg), values_(std::move(values)) {
  const std::size_t expected = static_cast<std::size_t>(tg.nt() + 1) * static_cast<std::size_t>(sg.size());
  if (values_.size() != expected) throw DomainError("DriftField: size does not match the grids");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("DriftField: non-finite drift");
    bound_ = std::max(bound_, std::abs(v));
  }
}

DriftField DriftField::constant(const SpaceGrid& sg, const TimeGrid& tg, double value) {
  return DriftField(sg, tg,
                    std::vector<double>(static_cast<std::size_t>(tg.nt() + 1) *
                                            static_cast<std::size_t>(sg.size()),
                                        value));
}

std::span<const double> DriftField::slice(int k) const {
  return std::span<const double>(values_).subspan(index(k, 0), static_cast<std::size_t>(sg_.size()));
}

namespace {

void check_compatible(const SpaceGrid& sg, const DriftField& alpha, const TimeGrid& tg) {
  if (!(alpha.space() == sg)) throw DomainError("drift and density grids differ");
  if (alpha.time().nt() != tg.nt() || std::abs(alpha.time().dt() - tg.dt()) > 1e-15)
    throw DomainError("drift and solve time grids differ");
}

void check_cfl(const SpaceGrid& sg, const TimeGrid& tg, double bound) {
  if (bound <= 0.0) return;
  const double limit = sg.dx() / (2.0 * bound);
  if (tg.dt() > limit * (1.0 + 1e-12)) {
    const int suggested = static_cast<int>(std::ceil((tg.T() - tg.t0()) / limit));
    std::ostringstream os;
    os << "advective CFL violated: dt = " << tg.dt() << " > dx/(2 R_alpha) = " << limit;
    throw CflError(os.str(), suggested);
  }
}

// Upwind face flux of the explicit step; face j joins nodes j and j+1.
struct Faces {
  std::vector<double> plus, minus;  // positive and negative parts of the face velocity
};

Faces face_velocities(std::span<const double> a) {
  const std::size_t nf = a.size() - 1;
  Faces f{std::vector<double>(nf), std::vector<double>(nf)};
  for (std::size_t j = 0; j < nf; ++j) {
    const double v = 0.5 * (a[j] + a[j + 1]);
    f.plus[j] = std::max(v, 0.0);
    f.minus[j] = std::min(v, 0.0);
  }
  return f;
}

}  // namespace

FPPath solve_fp(const GridDensity& m0, const DriftField& alpha, const TimeGrid& tg) {
  const SpaceGrid& sg = m0.grid();
  check_compatible(sg, alpha, tg);
  check_cfl(sg, tg, alpha.bound());

  const int nx = sg.nx();
  const double dx = sg.dx();
  const double dt = tg.dt();
  const double ratio = dt / dx;
  const ImplicitLaplacian heat(nx, dt / (dx * dx));

  FPPath path{tg, {}, {}, 0.0};
  path.densities.reserve(static_cast<std::size_t>(tg.nt() + 1));
  path.densities.push_back(m0);
  path.masses.push_back(m0.mass());

  std::vector<double> cur(m0.values().begin(), m0.values().end());
  std::vector<double> next(cur.size());
  for (int k = 0; k < tg.nt(); ++k) {
    const Faces f = face_velocities(alpha.slice(k));
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 1; i <= nx; ++i) next[static_cast<std::size_t>(i)] = cur[static_cast<std::size_t>(i)];
    for (int j = 0; j <= nx; ++j) {
      const auto J = static_cast<std::size_t>(j);
      const double flux = f.plus[J] * cur[J] + f.minus[J] * cur[J + 1];
      if (j >= 1) next[J] -= ratio * flux;
      if (j + 1 <= nx) next[J + 1] += ratio * flux;
    }
    next[0] = 0.0;
    next[static_cast<std::size_t>(nx + 1)] = 0.0;
    heat.solve_line(next.data(), 1);

    for (int i = 1; i <= nx; ++i) {
      double& v = next[static_cast<std::size_t>(i)];
      if (v < 0.0) {
        if (v < -1e-12) {
          std::ostringstream os;
          os << "solve_fp: positivity lost at step " << k << ", node " << i << " (value " << v << ")";
          throw SolverError(os.str());
        }
        path.clamped_mass += -v * dx;
        v = 0.0;
      }
    }
    cur.swap(next);
    path.densities.emplace_back(sg, cur);
    path.masses.push_back(path.densities.back().mass());
  }
  return path;
}

std::vector<std::vector<double>> solve_backward_transport(std::span<const double> phi_T,
                                                          const DriftField& alpha,
                                                          const TimeGrid& tg) {
  const SpaceGrid& sg = alpha.space();
  if (phi_T.size() != static_cast<std::size_t>(sg.size()))
    throw DomainError("solve_backward_transport: terminal data has the wrong size");
  if (std::abs(phi_T.front()) > 1e-14 || std::abs(phi_T.back()) > 1e-14)
    throw DomainError("solve_backward_transport: terminal data must vanish on the boundary");
  check_compatible(sg, alpha, tg);
  check_cfl(sg, tg, alpha.bound());

  const int nx = sg.nx();
  const double ratio = tg.dt() / sg.dx();
  const ImplicitLaplacian heat(nx, tg.dt() / (sg.dx() * sg.dx()));

  std::vector<std::vector<double>> out(static_cast<std::size_t>(tg.nt() + 1));
  std::vector<double> f(phi_T.begin(), phi_T.end());
  f.front() = f.back() = 0.0;
  out[static_cast<std::size_t>(tg.nt())] = f;
  std::vector<double> g(f.size());
  for (int k = tg.nt() - 1; k >= 0; --k) {
    heat.solve_line(f.data(), 1);  // the heat matrix is symmetric
    const Faces fc = face_velocities(alpha.slice(k));
    std::fill(g.begin(), g.end(), 0.0);
    for (int i = 1; i <= nx; ++i) g[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)];
    for (int j = 0; j <= nx; ++j) {
      const auto J = static_cast<std::size_t>(j);
      const double jump = f[J + 1] - f[J];
      if (j >= 1) g[J] += ratio * fc.plus[J] * jump;
      if (j + 1 <= nx) g[J + 1] += ratio * fc.minus[J] * jump;
    }
    f.swap(g);
    out[static_cast<std::size_t>(k)] = f;
  }
  return out;
}

namespace {

void energy_terms(std::span<const double> m, std::span<const double> a, double dx, double& grad_sq,
                  double& transport) {
  grad_sq = 0.0;
  transport = 0.0;
  for (std::size_t j = 0; j + 1 < m.size(); ++j) {
    const double dm = (m[j + 1] - m[j]) / dx;
    const double mf = 0.5 * (m[j] + m[j + 1]);
    const double af = 0.5 * (a[j] + a[j + 1]);
    grad_sq += dm * dm * dx;
    transport += mf * af * dm * dx;
  }
}

}  // namespace

double l2_energy_residual(const FPPath& path, const DriftField& alpha) {
  const TimeGrid& tg = path.time;
  const double dx = path.at(0).grid().dx();
  double integral = 0.0;
  for (int k = 0; k <= tg.nt(); ++k) {
    double g, t;
    energy_terms(path.at(k).values(), alpha.slice(k), dx, g, t);
    const double w = (k == 0 || k == tg.nt()) ? 0.5 : 1.0;
    integral += w * tg.dt() * (-2.0 * g + 2.0 * t);
  }
  const double lhs = path.at(tg.nt()).l2_norm_squared() - path.at(0).l2_norm_squared();
  return std::abs(lhs - integral);
}

double max_abs_gradient(std::span<const double> f, double dx) {
  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < f.size(); ++j) worst = std::max(worst, std::abs(f[j + 1] - f[j]) / dx);
  return worst;
}

double running_cost(const FPPath& m_path, const DriftField& alpha, const ModelSpec& model,
                    int steps) {
  const TimeGrid& tg = m_path.time;
  const SpaceGrid& sg = m_path.at(0).grid();
  if (steps < 0 || steps > tg.nt()) throw DomainError("running_cost: step count out of range");
  double total = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const GridDensity& m = m_path.at(k);
    double lag = 0.0;
    for (int i = 1; i <= sg.nx(); ++i) lag += model.lagrangian(sg.node(i), alpha.at(k, i)) * m[i];
    lag *= sg.dx();
    const double rate = lag + model.running().value(m);
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    if (steps > 0) total += w * tg.dt() * rate;
  }
  return total;
}

double evaluate_cost(const FPPath& m_path, const DriftField& alpha, const ModelSpec& model) {
  const int nt = m_path.time.nt();
  return running_cost(m_path, alpha, model, nt) + model.terminal().value(m_path.at(nt));
}

}  // namespace amfc
