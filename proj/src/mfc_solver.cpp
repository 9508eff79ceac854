#include "amfc/mfc_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/metric.hpp"
#include "amfc/sampling.hpp"
#include "amfc/tridiag.hpp"

namespace amfc {

namespace {

std::vector<double> derivative_field(const MomentFunctional& fn, const GridDensity& m) {
  auto f = fn.derivative_field(m);
  f.front() = 0.0;
  f.back() = 0.0;
  return f;
}

double nodal_gradient(std::span<const double> u, int i, double dx) {
  const int last = static_cast<int>(u.size()) - 1;
  const auto at = [&](int j) { return u[static_cast<std::size_t>(j)]; };
  if (i == 0) return (at(1) - at(0)) / dx;
  if (i == last) return (at(last) - at(last - 1)) / dx;
  return (at(i + 1) - at(i - 1)) / (2 * dx);
}

}  // namespace

std::vector<std::vector<double>> solve_hjb_backward(const FPPath& m_path, const ModelSpec& model,
                                                    const TimeGrid& tg, double R) {
  if (!(R > 0.0)) throw DomainError("solve_hjb_backward: R must be positive");
  if (static_cast<int>(m_path.densities.size()) != tg.nt() + 1)
    throw DomainError("solve_hjb_backward: path length does not match the time grid");
  const SpaceGrid& sg = m_path.at(0).grid();
  const int n = sg.size();
  const double dx = sg.dx(), dt = tg.dt();
  const ImplicitLaplacian heat(sg.nx(), dt / (dx * dx));

  std::vector<std::vector<double>> u(static_cast<std::size_t>(tg.nt() + 1));
  u.back() = derivative_field(model.terminal(), m_path.at(tg.nt()));
  for (int k = tg.nt() - 1; k >= 0; --k) {
    const auto& v = u[static_cast<std::size_t>(k + 1)];
    const auto source = derivative_field(model.running(), m_path.at(k));
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    double theta_max = 0.0;
    for (int i = 1; i <= sg.nx(); ++i) {
      const auto s = static_cast<std::size_t>(i);
      const double x = sg.node(i);
      const double pm = (v[s] - v[s - 1]) / dx;
      const double pp = (v[s + 1] - v[s]) / dx;
      const double theta = std::max(std::abs(model.truncated_feedback(x, pm, R)),
                                    std::abs(model.truncated_feedback(x, pp, R)));
      theta_max = std::max(theta_max, theta);
      const double h = model.truncated_hamiltonian(x, 0.5 * (pm + pp), R) - 0.5 * theta * (pp - pm);
      w[s] = v[s] + dt * (source[s] - h);
    }
    if (dt * 2.0 * theta_max > dx) {
      std::ostringstream os;
      os << "solve_hjb_backward: monotonicity CFL violated at step " << k << ": dt = " << dt
         << " > dx/(2 theta) = " << dx / (2 * theta_max);
      throw CflError(os.str(), static_cast<int>(std::ceil((tg.T() - tg.t0()) * 2.0 * theta_max / dx)));
    }
    heat.solve_line(w.data(), 1);
    u[static_cast<std::size_t>(k)] = std::move(w);
  }
  return u;
}

DriftField feedback_drift(const std::vector<std::vector<double>>& u_path, const ModelSpec& model,
                          const SpaceGrid& sg, const TimeGrid& tg, double R) {
  const int n = sg.size();
  std::vector<double> a(static_cast<std::size_t>(tg.nt() + 1) * static_cast<std::size_t>(n));
  for (int k = 0; k <= tg.nt(); ++k) {
    const auto& u = u_path[static_cast<std::size_t>(k)];
    for (int i = 0; i < n; ++i)
      a[static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          model.truncated_feedback(sg.node(i), nodal_gradient(u, i, sg.dx()), R);
  }
  return DriftField(sg, tg, std::move(a));
}

double max_gradient(const std::vector<std::vector<double>>& u_path, double dx) {
  double g = 0.0;
  for (const auto& u : u_path) g = std::max(g, max_abs_gradient(u, dx));
  return g;
}

namespace {

double path_gap(const FPPath& a, const FPPath& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.densities.size(); ++k)
    gap = std::max(gap, metric_d_fast(a.densities[k], b.densities[k]));
  return gap;
}

FPPath blend(const FPPath& a, const FPPath& b, double beta) {
  FPPath out = a;
  for (std::size_t k = 0; k < a.densities.size(); ++k) {
    const auto va = a.densities[k].values(), vb = b.densities[k].values();
    std::vector<double> v(va.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - beta) * va[i] + beta * vb[i];
    out.densities[k] = GridDensity(a.densities[k].grid(), std::move(v));
    out.masses[k] = out.densities[k].mass();
  }
  return out;
}

int locate_time(double t0, const TimeGrid& tg) {
  const double pos = (t0 - tg.t0()) / tg.dt();
  const long k = std::lround(pos);
  if (k < 0 || k > tg.nt() || std::abs(pos - static_cast<double>(k)) > 1e-8)
    throw DomainError("solve_mfc: t0 is not a node of the time grid");
  return static_cast<int>(k);
}

}  // namespace

MFCSolution solve_mfc(double t0, const GridDensity& m0, const ModelSpec& model, const TimeGrid& tg,
                      const MfcOptions& opts) {
  if (!(opts.R > 0.0) || opts.max_iter < 1) throw DomainError("solve_mfc: invalid options");
  const SpaceGrid& sg = m0.grid();
  const int k0 = locate_time(t0, tg);
  MFCSolution sol{.t0 = t0,
                  .time = tg,
                  .u_path = {},
                  .m_path = FPPath{tg, {}, {}, 0.0},
                  .alpha_path = DriftField::constant(sg, tg, 0.0),
                  .history = {},
                  .options = opts};
  if (k0 == tg.nt()) {
    sol.value = model.terminal().value(m0);
    sol.m_path = FPPath{tg, {m0}, {m0.mass()}, 0.0};
    sol.u_path = {derivative_field(model.terminal(), m0)};
    sol.converged = true;
    sol.cost_low = sol.cost_high = sol.value;
    return sol;
  }
  const TimeGrid sub = k0 == 0 ? tg : tg.tail(k0);
  sol.time = sub;

  FPPath m = solve_fp(m0, DriftField::constant(sg, sub, 0.0), sub);
  double best_residual = std::numeric_limits<double>::infinity();
  int doublings = 0;
  double last_residual = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opts.max_iter; ++k) {
    auto u = solve_hjb_backward(m, model, sub, opts.R);
    auto alpha = feedback_drift(u, model, sg, sub, opts.R);
    FPPath response = solve_fp(m0, alpha, sub);
    const double residual = path_gap(m, response);
    const double cost = evaluate_cost(response, alpha, model);
    sol.history.push_back({k + 1, residual, cost});
    doublings = residual > 2.0 * last_residual ? doublings + 1 : 0;
    last_residual = residual;
    if (residual < best_residual) {
      best_residual = residual;
      sol.u_path = std::move(u);
      sol.alpha_path = std::move(alpha);
      sol.m_path = response;
      sol.value = cost;
      sol.residual = residual;
      sol.iterations = k + 1;
    }
    if (residual < opts.tol) {
      sol.converged = true;
      break;
    }
    if (doublings >= 5) {
      sol.diverged = true;
      break;
    }
    m = blend(m, response, 2.0 / (k + 3.0));
  }
  const std::size_t window = std::min<std::size_t>(10, sol.history.size());
  sol.cost_low = std::numeric_limits<double>::infinity();
  sol.cost_high = -std::numeric_limits<double>::infinity();
  for (std::size_t j = sol.history.size() - window; j < sol.history.size(); ++j) {
    sol.cost_low = std::min(sol.cost_low, sol.history[j].cost);
    sol.cost_high = std::max(sol.cost_high, sol.history[j].cost);
  }
  sol.max_du = max_gradient(sol.u_path, sg.dx());
  sol.clamp_active = sol.max_du >= opts.R;
  return sol;
}

double dpp_residual(const MFCSolution& sol, const ModelSpec& model, double h) {
  const TimeGrid& tg = sol.time;
  const double pos = h / tg.dt();
  const long steps = std::lround(pos);
  if (!(h > 0.0) || steps < 1 || steps > tg.nt() || std::abs(pos - static_cast<double>(steps)) > 1e-8)
    throw DomainError("dpp_residual: h must be a positive multiple of dt within the horizon");
  const int s = static_cast<int>(steps);
  const double head = running_cost(sol.m_path, sol.alpha_path, model, s);
  const auto tail = solve_mfc(tg.time(s), sol.m_path.at(s), model, tg, sol.options);
  return std::abs(sol.value - (head + tail.value));
}

double truncation_gap(double t0, const GridDensity& m0, const ModelSpec& model, const TimeGrid& tg,
                      double R1, double R2, const MfcOptions& opts) {
  MfcOptions a = opts, b = opts;
  a.R = R1;
  b.R = R2;
  return std::abs(solve_mfc(t0, m0, model, tg, a).value - solve_mfc(t0, m0, model, tg, b).value);
}

RegularityModulus regularity_modulus(const ModelSpec& model, const TimeGrid& tg, const SpaceGrid& sg,
                                     int samples, std::uint64_t seed, const MfcOptions& opts) {
  RegularityModulus out;
  std::mt19937_64 rng(seed);
  const auto node_time = [&](double u) {
    return tg.time(std::min(tg.nt() - 1, static_cast<int>(u * tg.nt())));
  };
  for (int j = 0; j < samples; ++j) {
    const auto h = halton_point(static_cast<std::uint64_t>(j) + 1, 2);
    const double t = node_time(h[0]), s = node_time(h[1]);
    const GridDensity m = random_density(sg, rng);
    const GridDensity n = random_density(sg, rng);
    const double Utm = solve_mfc(t, m, model, tg, opts).value;
    const double Utn = solve_mfc(t, n, model, tg, opts).value;
    const double d = metric_d_fast(m, n);
    if (d > 0.0) {
      out.C_space = std::max(out.C_space, std::abs(Utm - Utn) / d);
      ++out.pairs;
    }
    if (s != t) {
      const double Usm = solve_mfc(s, m, model, tg, opts).value;
      const double Usn = solve_mfc(s, n, model, tg, opts).value;
      const double root = std::sqrt(std::abs(t - s));
      out.C_time = std::max(out.C_time, std::abs(Utm - Usm) / root);
      out.C_joint = std::max(out.C_joint, std::abs(Utm - Usn) / (root + d));
      out.pairs += 2;
    }
  }
  return out;
}

GradientSurvey survey_gradients(const ModelSpec& model, const SpaceGrid& sg, const TimeGrid& tg, double R,
                                int paths, std::uint64_t seed) {
  GradientSurvey out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a_max = 0.5 * std::min(R, sg.dx() / (2.0 * tg.dt()));
  for (int p = 0; p < paths; ++p) {
    const GridDensity m0 = random_density(sg, rng);
    const double a0 = a_max * u(rng), a1 = a_max * u(rng);
    std::vector<double> a(static_cast<std::size_t>(tg.nt() + 1) * static_cast<std::size_t>(sg.size()));
    for (int k = 0; k <= tg.nt(); ++k)
      for (int i = 0; i < sg.size(); ++i)
        a[static_cast<std::size_t>(k) * static_cast<std::size_t>(sg.size()) + static_cast<std::size_t>(i)] =
            a0 * std::cos(3.0 * sg.node(i) + 2.0 * tg.time(k)) + a1 * (1.0 - 2.0 * sg.node(i));
    const FPPath path = solve_fp(m0, DriftField(sg, tg, std::move(a)), tg);
    out.sup_du.push_back(max_gradient(solve_hjb_backward(path, model, tg, R), sg.dx()));
  }
  if (!out.sup_du.empty()) {
    out.max = *std::max_element(out.sup_du.begin(), out.sup_du.end());
    out.min = *std::min_element(out.sup_du.begin(), out.sup_du.end());
  }
  return out;
}

}  // namespace amfc
