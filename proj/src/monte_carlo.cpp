#include "amfc/monte_carlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <thread>

#include "amfc/error.hpp"

namespace amfc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

constexpr int kMaxLevel = 4;

// Nodal D_{x^1} V^{N,K} for every level and stored layer; other coordinates
// follow by symmetry of the level tensors.
class GradientTable {
 public:
  explicit GradientTable(const HierarchySolution& sol) : sol_(sol), n_(sol.space().size()) {
    if (sol.N() > kMaxLevel) throw DomainError("monte_carlo_value: N > 4 not supported");
    table_.resize(static_cast<std::size_t>(sol.N() + 1));
    const double dx = sol.space().dx();
    for (int K = 1; K <= sol.N(); ++K) {
      const std::size_t size = sol.level_size(K);
      const std::size_t s = size / static_cast<std::size_t>(n_);  // stride of coordinate 1
      auto& out = table_[static_cast<std::size_t>(K)];
      out.resize(size * static_cast<std::size_t>(sol.layers()));
      for (int j = 0; j < sol.layers(); ++j) {
        const auto v = sol.layer(K, j);
        double* g = out.data() + static_cast<std::size_t>(j) * size;
        for (std::size_t f = 0; f < size; ++f) {
          const int c = static_cast<int>(f / s);
          const int lo = std::max(c - 1, 0), hi = std::min(c + 1, n_ - 1);
          g[f] = (v[f - static_cast<std::size_t>(c - lo) * s] - v[f + static_cast<std::size_t>(hi - c) * s]) /
                 (-(hi - lo) * dx);
        }
      }
    }
  }

  // D_{x^i} V^{N,K}(t, x) for interior x.
  double gradient(int K, double t, const double* x, int i) const {
    std::array<double, kMaxLevel> y{};
    for (int j = 0; j < K; ++j) y[static_cast<std::size_t>(j)] = x[j];
    std::swap(y[0], y[static_cast<std::size_t>(i)]);

    const TimeGrid& tg = sol_.time();
    const double h = tg.dt() * sol_.stride();
    const double s = (t - tg.t0()) / h;
    const int j0 = std::clamp(static_cast<int>(std::floor(s)), 0, sol_.layers() - 2);
    const double wt = std::clamp(s - j0, 0.0, 1.0);

    const double dx = sol_.space().dx();
    const int nx = sol_.space().nx();
    std::array<int, kMaxLevel> cell{};
    std::array<double, kMaxLevel> w{};
    for (int j = 0; j < K; ++j) {
      const double q = y[static_cast<std::size_t>(j)] / dx;
      const int c = std::clamp(static_cast<int>(std::floor(q)), 0, nx);
      cell[static_cast<std::size_t>(j)] = c;
      w[static_cast<std::size_t>(j)] = std::clamp(q - c, 0.0, 1.0);
    }
    const std::size_t size = sol_.level_size(K);
    const auto& tab = table_[static_cast<std::size_t>(K)];
    double result = 0.0;
    for (int side = 0; side < 2; ++side) {
      const double ws = side == 0 ? 1.0 - wt : wt;
      if (ws == 0.0) continue;
      const double* g = tab.data() + static_cast<std::size_t>(j0 + side) * size;
      double acc = 0.0;
      for (unsigned corner = 0; corner < (1u << K); ++corner) {
        double weight = 1.0;
        std::size_t f = 0;
        for (int j = 0; j < K; ++j) {
          const bool up = (corner >> j) & 1u;
          f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(cell[static_cast<std::size_t>(j)] + (up ? 1 : 0));
          weight *= up ? w[static_cast<std::size_t>(j)] : 1.0 - w[static_cast<std::size_t>(j)];
        }
        if (weight != 0.0) acc += weight * g[f];
      }
      result += ws * acc;
    }
    return result;
  }

 private:
  const HierarchySolution& sol_;
  int n_;
  std::vector<std::vector<double>> table_;
};

double functional_value(const MomentFunctional& fn, int N, const double* x, int K,
                        std::vector<double>& y) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    double s = 0.0;
    for (int i = 0; i < K; ++i) s += fn.test(j).value(x[i]);
    y[j] = s / N;
  }
  return fn.value(y);
}

}  // namespace

MonteCarloResult monte_carlo_value(const HierarchySolution& sol, double t0,
                                   std::span<const double> x0, const MonteCarloOptions& opts) {
  if (opts.nsim < 100) throw DomainError("monte_carlo_value: nsim < 100 gives no statistical power");
  if (opts.substeps < 4) throw DomainError("monte_carlo_value: at least 4 substeps per time step");
  const int N = sol.N();
  if (static_cast<int>(x0.size()) > N) throw DomainError("monte_carlo_value: more points than N");
  const TimeGrid& tg = sol.time();
  if (!(t0 >= tg.t0() && t0 <= tg.T())) throw DomainError("monte_carlo_value: t0 outside the horizon");
  for (double v : x0)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("monte_carlo_value: start outside the closed domain");

  const ModelSpec& model = sol.model();
  const GradientTable grads(sol);
  const double R = sol.R();
  const double target = tg.dt() / opts.substeps;
  const int steps = std::max(0, static_cast<int>(std::ceil((tg.T() - t0) / target - 1e-9)));
  const double h = steps > 0 ? (tg.T() - t0) / steps : 0.0;
  const double sqrt2h = std::sqrt(2.0 * h);
  const double F0 = model.F_zero();

  std::vector<double> costs(static_cast<std::size_t>(opts.nsim));
  auto run_range = [&](int begin, int end) {
    std::vector<double> y_run(model.running().moment_count()), y_term(model.terminal().moment_count());
    std::array<double, kMaxLevel> x{}, a{};
    for (int traj = begin; traj < end; ++traj) {
      std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(static_cast<std::uint64_t>(traj))));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      int K = 0;
      for (double v : x0)
        if (v > 0.0 && v < 1.0) x[static_cast<std::size_t>(K++)] = v;
      double cost = 0.0;
      for (int step = 0; step < steps; ++step) {
        const double t = t0 + step * h;
        if (K == 0) {
          cost += (steps - step) * h * F0;
          break;
        }
        double lag = 0.0;
        for (int i = 0; i < K; ++i) {
          const double p = N * grads.gradient(K, t, x.data(), i);
          a[static_cast<std::size_t>(i)] = model.truncated_feedback(x[static_cast<std::size_t>(i)], p, R);
          lag += model.lagrangian(x[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(i)]);
        }
        cost += h * (lag / N + functional_value(model.running(), N, x.data(), K, y_run));
        int alive = 0;
        for (int i = 0; i < K; ++i) {
          const double xo = x[static_cast<std::size_t>(i)];
          const double xn = xo + a[static_cast<std::size_t>(i)] * h + sqrt2h * normal(rng);
          bool dead = !(xn > 0.0 && xn < 1.0);
          if (!dead && opts.bridge) {
            const double p0 = std::exp(-xo * xn / h);
            const double p1 = std::exp(-(1.0 - xo) * (1.0 - xn) / h);
            dead = uniform(rng) < 1.0 - (1.0 - p0) * (1.0 - p1);
          }
          if (!dead) x[static_cast<std::size_t>(alive++)] = xn;
        }
        K = alive;
      }
      cost += functional_value(model.terminal(), N, x.data(), K, y_term);
      costs[static_cast<std::size_t>(traj)] = cost;
    }
  };

  const int threads = std::clamp(opts.threads, 1, 64);
  if (threads == 1) {
    run_range(0, opts.nsim);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opts.nsim + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int b = w * chunk, e = std::min(opts.nsim, b + chunk);
      if (b < e) pool.emplace_back(run_range, b, e);
    }
    for (auto& th : pool) th.join();
  }

  double mean = 0.0;
  for (double c : costs) mean += c;
  mean /= opts.nsim;
  double var = 0.0;
  for (double c : costs) var += (c - mean) * (c - mean);
  var /= (opts.nsim - 1);
  return {mean, std::sqrt(var / opts.nsim), opts.nsim, h};
}

}  // namespace amfc
