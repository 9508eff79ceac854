#include "amfc/metric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/quadrature.hpp"

namespace amfc {

double dist_boundary(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("dist_boundary: point outside [0,1]");
  return std::min(x, 1.0 - x);
}

double rho(double x, double y) {
  return std::min(std::abs(x - y), dist_boundary(x) + dist_boundary(y));
}

// ---------------------------------------------------------------------------
// Min-cost flow dual of the grid LP.

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CycleFlow {
  // Edge e joins node e and node (e + 1) mod n_nodes; node 0 is the boundary.
  int n_nodes;
  double cost;
  std::vector<double> fwd;  // flow e -> e+1
  std::vector<double> bwd;  // flow e+1 -> e

  int head(int e) const { return e; }
  int tail(int e) const { return (e + 1) % n_nodes; }
};

}  // namespace

LpSolution metric_d_lp_solve(const GridDensity& m, const GridDensity& n) {
  if (!(m.grid() == n.grid())) throw DomainError("metric_d_lp: grids differ");
  const SpaceGrid& grid = m.grid();
  const double dx = grid.dx();
  const int nodes = grid.nx() + 1;  // interior nodes 1..nx plus the collapsed boundary 0

  std::vector<double> excess(static_cast<std::size_t>(nodes), 0.0);
  double total = 0.0, scale = 0.0;
  for (int i = 1; i <= grid.nx(); ++i) {
    const double b = (m[i] - n[i]) * dx;
    excess[static_cast<std::size_t>(i)] = b;
    total += b;
    scale += std::abs(b);
  }
  excess[0] = -total;
  scale += std::abs(total);

  LpSolution sol;
  sol.potential.assign(static_cast<std::size_t>(grid.size()), 0.0);
  if (scale == 0.0) return sol;
  const double tol = 1e-15 * scale;

  CycleFlow flow{nodes, dx, std::vector<double>(static_cast<std::size_t>(nodes), 0.0),
                 std::vector<double>(static_cast<std::size_t>(nodes), 0.0)};
  std::vector<double> pot(static_cast<std::size_t>(nodes), 0.0);
  std::vector<double> dist(static_cast<std::size_t>(nodes));
  std::vector<int> via_edge(static_cast<std::size_t>(nodes));
  std::vector<char> via_fwd(static_cast<std::size_t>(nodes));
  std::vector<char> done(static_cast<std::size_t>(nodes));

  // Residual arc from u along edge e in direction `forward`: cancelling
  // opposite flow costs -dx (capacity = that flow), otherwise +dx (unbounded).
  auto arc = [&](int e, bool forward, double& cost, double& cap) {
    const double opposite = forward ? flow.bwd[static_cast<std::size_t>(e)]
                                    : flow.fwd[static_cast<std::size_t>(e)];
    if (opposite > 0.0) {
      cost = -dx;
      cap = opposite;
    } else {
      cost = dx;
      cap = kInf;
    }
  };

  const int max_iterations = 10 * (nodes + 1) + 100;
  int iter = 0;
  for (;;) {
    int s = -1;
    double best = tol;
    for (int v = 0; v < nodes; ++v) {
      if (excess[static_cast<std::size_t>(v)] > best) {
        best = excess[static_cast<std::size_t>(v)];
        s = v;
      }
    }
    if (s < 0) break;
    if (++iter > max_iterations) {
      std::ostringstream os;
      os << "metric_d_lp: no convergence after " << iter - 1 << " augmentations";
      throw SolverError(os.str());
    }

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(s)] = 0.0;
    heap.emplace(0.0, s);
    int t = -1;
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (done[static_cast<std::size_t>(u)]) continue;
      done[static_cast<std::size_t>(u)] = 1;
      if (excess[static_cast<std::size_t>(u)] < -tol) {
        t = u;
        break;
      }
      // Two neighbours on the cycle: via edge u (forward) and edge u-1 (backward).
      const int e_fwd = u;
      const int e_bwd = (u - 1 + nodes) % nodes;
      for (int pass = 0; pass < 2; ++pass) {
        const bool forward = pass == 0;
        const int e = forward ? e_fwd : e_bwd;
        const int v = forward ? flow.tail(e) : flow.head(e);
        double c, cap;
        arc(e, forward, c, cap);
        const double reduced = std::max(
            0.0, c + pot[static_cast<std::size_t>(u)] - pot[static_cast<std::size_t>(v)]);
        if (d + reduced < dist[static_cast<std::size_t>(v)]) {
          dist[static_cast<std::size_t>(v)] = d + reduced;
          via_edge[static_cast<std::size_t>(v)] = e;
          via_fwd[static_cast<std::size_t>(v)] = forward ? 1 : 0;
          heap.emplace(d + reduced, v);
        }
      }
    }
    if (t < 0) throw SolverError("metric_d_lp: no reachable deficit node");

    const double dt = dist[static_cast<std::size_t>(t)];
    for (int v = 0; v < nodes; ++v)
      pot[static_cast<std::size_t>(v)] += std::min(dist[static_cast<std::size_t>(v)], dt);

    double push = std::min(excess[static_cast<std::size_t>(s)], -excess[static_cast<std::size_t>(t)]);
    for (int v = t; v != s;) {
      const int e = via_edge[static_cast<std::size_t>(v)];
      const bool forward = via_fwd[static_cast<std::size_t>(v)] != 0;
      double c, cap;
      arc(e, forward, c, cap);
      push = std::min(push, cap);
      v = forward ? flow.head(e) : flow.tail(e);
    }
    for (int v = t; v != s;) {
      const int e = via_edge[static_cast<std::size_t>(v)];
      const bool forward = via_fwd[static_cast<std::size_t>(v)] != 0;
      auto& same = forward ? flow.fwd[static_cast<std::size_t>(e)] : flow.bwd[static_cast<std::size_t>(e)];
      auto& opposite = forward ? flow.bwd[static_cast<std::size_t>(e)] : flow.fwd[static_cast<std::size_t>(e)];
      if (opposite > 0.0) {
        opposite -= push;
        if (opposite < 0.0) opposite = 0.0;
      } else {
        same += push;
      }
      v = forward ? flow.head(e) : flow.tail(e);
    }
    excess[static_cast<std::size_t>(s)] -= push;
    excess[static_cast<std::size_t>(t)] += push;
  }

  sol.iterations = iter;
  double primal = 0.0;
  for (int e = 0; e < nodes; ++e)
    primal += dx * (flow.fwd[static_cast<std::size_t>(e)] + flow.bwd[static_cast<std::size_t>(e)]);
  sol.value = primal;

  double dual = 0.0;
  for (int i = 1; i <= grid.nx(); ++i) {
    const double phi = -(pot[static_cast<std::size_t>(i)] - pot[0]);
    sol.potential[static_cast<std::size_t>(i)] = phi;
    dual += phi * (m[i] - n[i]) * dx;
  }
  sol.dual_value = dual;
  return sol;
}

double metric_d_lp(const GridDensity& m, const GridDensity& n) {
  return metric_d_lp_solve(m, n).value;
}

double metric_d_fast(std::span<const double> m, std::span<const double> n, double dx) {
  if (m.size() != n.size() || m.size() < 3) throw DomainError("metric_d_fast: size mismatch");
  const std::size_t nx = m.size() - 2;
  // faces[j]: mass of m - n at nodes > j, for the face between nodes j and j+1.
  std::vector<double> faces(nx + 1);
  double acc = 0.0;
  for (std::size_t j = nx + 1; j-- > 0;) {
    faces[j] = acc;
    if (j >= 1) acc += (m[j] - n[j]) * dx;
  }
  std::vector<double> sorted = faces;
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
  const double median = sorted[mid];
  double s = 0.0;
  for (double f : faces) s += std::abs(f - median);
  return s * dx;
}

double metric_d_fast(const GridDensity& m, const GridDensity& n) {
  if (!(m.grid() == n.grid())) throw DomainError("metric_d_fast: grids differ");
  return metric_d_fast(m.values(), n.values(), m.grid().dx());
}

// ---------------------------------------------------------------------------

double exact_sum(std::span<const double> terms) {
  // Shewchuk's non-overlapping partials followed by a correctly rounded collapse.
  std::vector<double> partials;
  for (double x : terms) {
    std::size_t k = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[k++] = lo;
      x = hi;
    }
    partials.resize(k);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

double min_cost_assignment(const std::vector<std::vector<double>>& cost,
                           std::vector<int>* assignment) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) {
    if (assignment) assignment->clear();
    return 0.0;
  }
  // Row/column potentials u, v; p[j] = row matched to column j (1-based, 0 = none).
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), kInf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  std::vector<double> matched(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    matched[static_cast<std::size_t>(i)] =
        cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(row_to_col[static_cast<std::size_t>(i)])];
  const double total = exact_sum(matched);
  if (assignment) *assignment = std::move(row_to_col);
  return total;
}

std::vector<double> padded_points(const EmpiricalConfig& c) {
  std::vector<double> pts = c.alive_points();
  pts.resize(static_cast<std::size_t>(c.denom()), std::numeric_limits<double>::quiet_NaN());
  return pts;
}

namespace {

void boundary_terms(double x, std::vector<double>& out) {
  if (x <= 0.5) {
    out.push_back(x);
  } else {
    out.push_back(1.0);
    out.push_back(-x);
  }
}

}  // namespace

void append_rho_terms(double x, double y, std::vector<double>& out) {
  const bool bx = std::isnan(x), by = std::isnan(y);
  if (bx && by) return;
  if (bx) return boundary_terms(y, out);
  if (by) return boundary_terms(x, out);
  std::vector<double> direct{std::max(x, y), -std::min(x, y)};
  std::vector<double> via;
  boundary_terms(x, via);
  boundary_terms(y, via);
  const auto& best = exact_sum(direct) <= exact_sum(via) ? direct : via;
  out.insert(out.end(), best.begin(), best.end());
}

std::vector<std::vector<double>> rho_cost_matrix(const EmpiricalConfig& a,
                                                 const EmpiricalConfig& b) {
  if (a.denom() != b.denom()) throw DomainError("metric_d_rho_empirical: denominators differ");
  const int N = a.denom();
  const auto pa = padded_points(a), pb = padded_points(b);
  std::vector<std::vector<double>> cost(static_cast<std::size_t>(N),
                                        std::vector<double>(static_cast<std::size_t>(N)));
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      const double x = pa[static_cast<std::size_t>(i)], y = pb[static_cast<std::size_t>(j)];
      const bool bx = std::isnan(x), by = std::isnan(y);
      double c;
      if (bx && by) c = 0.0;
      else if (bx) c = dist_boundary(y);
      else if (by) c = dist_boundary(x);
      else c = rho(x, y);
      cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c;
    }
  }
  return cost;
}

double metric_d_rho_empirical(const EmpiricalConfig& a, const EmpiricalConfig& b) {
  if (a.denom() != b.denom()) throw DomainError("metric_d_rho_empirical: denominators differ");
  if (a.denom() > 64) throw DomainError("metric_d_rho_empirical: N > 64 not supported");
  std::vector<int> sigma;
  min_cost_assignment(rho_cost_matrix(a, b), &sigma);
  const auto pa = padded_points(a), pb = padded_points(b);
  std::vector<double> terms;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    append_rho_terms(pa[i], pb[static_cast<std::size_t>(sigma[i])], terms);
  return exact_sum(terms) / a.denom();
}

GridDensity atoms_on_grid(const EmpiricalConfig& a, const SpaceGrid& grid) {
  std::vector<double> v(static_cast<std::size_t>(grid.size()), 0.0);
  const double weight = 1.0 / (a.denom() * grid.dx());
  for (double x : a.alive_points()) {
    const int i = grid.nearest(x);
    if (!grid.is_boundary(i)) v[static_cast<std::size_t>(i)] += weight;
  }
  return GridDensity(grid, std::move(v));
}

MetricComparison compare_metrics(const EmpiricalConfig& a, const EmpiricalConfig& b,
                                 const SpaceGrid& fine_grid) {
  MetricComparison out;
  out.d_rho = metric_d_rho_empirical(a, b);
  out.d_val = metric_d_lp(atoms_on_grid(a, fine_grid), atoms_on_grid(b, fine_grid));
  out.slack = 2.0 * fine_grid.dx();
  out.sandwich_ok = 0.5 * out.d_val - out.slack <= out.d_rho && out.d_rho <= out.d_val + out.slack;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double bump(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

double bump_derivative(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? std::exp(-1.0 / q) * (-2.0 * r / (q * q)) : 0.0;
}

double bump_integral() {
  static const double z = [] {
    const double cuts[] = {0.0};
    return integrate_composite(bump, -1.0, 1.0, cuts, 1.0 / 64.0, 20);
  }();
  return z;
}

}  // namespace

Mollifier::Mollifier(double kappa) : kappa_(kappa), scale_(1.0 / (bump_integral() * kappa)) {
  if (!(kappa > 0.0)) throw DomainError("Mollifier: kappa must be positive");
}

double Mollifier::operator()(double x) const { return scale_ * bump(x / kappa_); }

double Mollifier::derivative(double x) const { return scale_ / kappa_ * bump_derivative(x / kappa_); }

MollifiedDensity mollify_empirical(const EmpiricalConfig& a, double kappa, const SpaceGrid& grid) {
  const double dx = grid.dx();
  if (kappa < 2.0 * dx) throw DomainError("mollify_empirical: kappa below 2 dx (under-resolved)");
  const Mollifier rho_k(kappa);
  std::vector<double> v(static_cast<std::size_t>(grid.size()), 0.0);
  for (double y : a.alive_points()) {
    const int lo = static_cast<int>(std::floor((y - kappa) / dx));
    const int hi = static_cast<int>(std::ceil((y + kappa) / dx));
    double lattice_mass = 0.0;
    for (int i = lo; i <= hi; ++i) lattice_mass += rho_k(i * dx - y);
    lattice_mass *= dx;
    const double w = 1.0 / (a.denom() * lattice_mass);
    for (int i = std::max(lo, 1); i <= std::min(hi, grid.nx()); ++i)
      v[static_cast<std::size_t>(i)] += w * rho_k(grid.node(i) - y);
  }
  double mass = trapezoid_mass(v, dx);
  if (mass > 1.0) {
    for (double& x : v) x /= mass;
  }
  return {GridDensity(grid, std::move(v)), kappa};
}

// ---------------------------------------------------------------------------

namespace {

struct AtomQuadrature {
  std::vector<double> cuts;
  double lo, hi, panel;
};

AtomQuadrature atom_quadrature(std::span<const double> xs, double kappa) {
  AtomQuadrature q;
  q.lo = *std::min_element(xs.begin(), xs.end()) - kappa;
  q.hi = *std::max_element(xs.begin(), xs.end()) + kappa;
  for (double x : xs) {
    q.cuts.push_back(x - kappa);
    q.cuts.push_back(x);
    q.cuts.push_back(x + kappa);
  }
  q.panel = kappa / 16.0;
  return q;
}

std::vector<double> interior_atoms(const EmpiricalConfig& a) {
  for (double x : a.points())
    if (!(x > 0.0 && x < 1.0)) throw DomainError("projected_l2: atom on the boundary");
  return {a.points().begin(), a.points().end()};
}

}  // namespace

double projected_l2(const EmpiricalConfig& a, double kappa) {
  const auto xs = interior_atoms(a);
  if (xs.empty()) return 0.0;
  const Mollifier r(kappa);
  const double invN = 1.0 / a.denom();
  const auto q = atom_quadrature(xs, kappa);
  return integrate_composite(
      [&](double y) {
        double s = 0.0;
        for (double x : xs) s += r(x - y);
        s *= invN;
        return s * s;
      },
      q.lo, q.hi, q.cuts, q.panel);
}

ProjectionDerivatives projected_l2_derivatives(const EmpiricalConfig& a, double kappa) {
  const auto xs = interior_atoms(a);
  ProjectionDerivatives out;
  if (xs.empty()) return out;
  const Mollifier r(kappa);
  const double N = a.denom();
  const double K = static_cast<double>(xs.size());
  const auto q = atom_quadrature(xs, kappa);

  out.psi = projected_l2(a, kappa);

  const double cut0[] = {0.0};
  const double drho_sq = integrate_composite(
      [&](double y) { return r.derivative(y) * r.derivative(y); }, -kappa, kappa, cut0,
      kappa / 16.0);

  // (rho * m)(y) and (D rho * m)(y)
  auto smooth_m = [&](double y) {
    double s = 0.0;
    for (double x : xs) s += r(y - x);
    return s / N;
  };
  auto dsmooth_m = [&](double y) {
    double s = 0.0;
    for (double x : xs) s += r.derivative(y - x);
    return s / N;
  };

  out.grads.resize(xs.size());
  out.laps.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double xi = xs[i];
    const double conv_rho = integrate_composite(
        [&](double y) { return r.derivative(xi - y) * smooth_m(y); }, q.lo, q.hi, q.cuts, q.panel);
    const double conv_drho = integrate_composite(
        [&](double y) { return r.derivative(xi - y) * dsmooth_m(y); }, q.lo, q.hi, q.cuts, q.panel);
    out.grads[i] = (2.0 / N) * conv_rho;
    out.laps[i] = (2.0 / N) * conv_drho + (2.0 / (N * N)) * drho_sq;
  }
  const double drho_m_sq = integrate_composite(
      [&](double y) {
        const double s = dsmooth_m(y);
        return s * s;
      },
      q.lo, q.hi, q.cuts, q.panel);
  out.lap_sum = -2.0 * drho_m_sq + (2.0 * K / (N * N)) * drho_sq;
  return out;
}

}  // namespace amfc
