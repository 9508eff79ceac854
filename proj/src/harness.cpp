#include "amfc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "amfc/error.hpp"
#include "amfc/hierarchy.hpp"
#include "amfc/metric.hpp"
#include "amfc/mfc_solver.hpp"
#include "amfc/sampling.hpp"

namespace amfc {

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, std::max(count, 1));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*hi == 0.0) return 1.0;
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

namespace {

HierarchySolution solve_level_family(int N, const ExperimentConfig& cfg, const ModelSpec& model) {
  HierarchyOptions o;
  o.R = cfg.R;
  o.store_stride = cfg.store_stride;
  return solve_hierarchy(N, model, SpaceGrid(cfg.nx), TimeGrid(0.0, cfg.params.T, cfg.nt), o);
}

std::string join_points(const std::vector<double>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) s += (i ? ";" : "") + fmt(pts[i]);
  return s;
}

struct Sample {
  int K = 0;
  int layer = 0;
  std::vector<int> idx;
  double V = 0.0;
  double U = 0.0;
  double d_bound = 0.0;
  double residual = 0.0;
};

}  // namespace

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  validate(cfg);
  const ModelSpec model = build_model(cfg);
  const SpaceGrid sg(cfg.nx);
  const SpaceGrid limit_grid(cfg.mfc_nx);
  const TimeGrid limit_time(0.0, cfg.params.T, cfg.mfc_nt);
  const double kappa = cfg.kappa_factor * limit_grid.dx();
  const MfcOptions mopt{cfg.mfc_R, cfg.mfc_tol, cfg.mfc_max_iter};

  ConvergenceReport rep;
  std::ostringstream samples_csv;
  samples_csv << "N,K,t,x,V,U,abs_error,mollify_d_bound,mfc_residual\n";
  for (int N : cfg.N_list) {
    ConvergenceRow row;
    row.N = N;
    try {
      const HierarchySolution sol = solve_level_family(N, cfg, model);
      row.scheme_tol = sg.dx() + sol.time().dt();
      const int layers = sol.layers();
      std::vector<Sample> samples(static_cast<std::size_t>(cfg.convergence_samples));
      for (int s = 0; s < cfg.convergence_samples; ++s) {
        const auto h = halton_point(static_cast<std::uint64_t>(s) + 1, 2 + N);
        Sample& smp = samples[static_cast<std::size_t>(s)];
        smp.K = 1 + std::min(N - 1, static_cast<int>(h[0] * N));
        smp.layer = std::min(layers - 2, static_cast<int>(h[1] * (layers - 1)));
        for (int i = 0; i < smp.K; ++i)
          smp.idx.push_back(1 + std::min(cfg.nx - 1, static_cast<int>(h[static_cast<std::size_t>(2 + i)] * cfg.nx)));
        std::sort(smp.idx.begin(), smp.idx.end());
        smp.V = sol.node_value(smp.K, smp.layer, smp.idx);
      }
      parallel_for(cfg.convergence_samples, cfg.workers, [&](int s) {
        Sample& smp = samples[static_cast<std::size_t>(s)];
        std::vector<double> pts;
        for (int i : smp.idx) pts.push_back(sg.node(i));
        const auto moll = mollify_empirical(EmpiricalConfig(N, pts), kappa, limit_grid);
        const auto lim = solve_mfc(sol.layer_time(smp.layer), moll.density, model, limit_time, mopt);
        if (lim.diverged) throw SolverError("limit solve diverged");
        smp.U = lim.value;
        smp.d_bound = moll.deviation_bound;
        smp.residual = lim.residual;
      });
      row.error = 0.0;
      for (const Sample& smp : samples) {
        std::vector<double> pts;
        for (int i : smp.idx) pts.push_back(sg.node(i));
        const double err = std::abs(smp.U - smp.V);
        if (err > row.error || row.arg_K == 0) {
          row.error = std::max(row.error, err);
          row.arg_K = smp.K;
          row.arg_t = sol.layer_time(smp.layer);
          row.arg_x = join_points(pts);
        }
        row.mollify_d_bound = std::max(row.mollify_d_bound, smp.d_bound);
        row.mfc_residual = std::max(row.mfc_residual, smp.residual);
        samples_csv << N << ',' << smp.K << ',' << fmt(sol.layer_time(smp.layer)) << ',' << join_points(pts) << ','
                    << fmt(smp.V) << ',' << fmt(smp.U) << ',' << fmt(err) << ',' << fmt(smp.d_bound) << ','
                    << fmt(smp.residual) << '\n';
      }
      row.samples = cfg.convergence_samples;
    } catch (const std::exception& e) {
      rep.failure += "N=" + std::to_string(N) + ": " + e.what() + "; ";
    }
    rep.rows.push_back(row);
  }

  rep.monotone = true;
  for (std::size_t j = 1; j < rep.rows.size(); ++j)
    rep.monotone = rep.monotone && rep.rows[j].error <= 1.1 * rep.rows[j - 1].error;
  rep.improves = rep.rows.size() < 2 || rep.rows.back().error < rep.rows.front().error ||
                 (rep.rows.back().error == 0.0 && rep.rows.front().error == 0.0);

  std::ostringstream csv;
  csv << "N,error,scheme_tol,mollify_d_bound,mfc_residual,mc_stderr,samples,arg_K,arg_t,arg_x,monotone_slack\n";
  for (const auto& r : rep.rows)
    csv << r.N << ',' << fmt(r.error) << ',' << fmt(r.scheme_tol) << ',' << fmt(r.mollify_d_bound) << ','
        << fmt(r.mfc_residual) << ',' << fmt(r.mc_stderr) << ',' << r.samples << ',' << r.arg_K << ','
        << fmt(r.arg_t) << ',' << r.arg_x << ',' << fmt(0.1) << '\n';
  rep.csv = csv.str();
  rep.samples_csv = samples_csv.str();
  return rep;
}

namespace {

constexpr double kUniformFactor = 2.0;

struct LipschitzStats {
  double holder = 0.0;
  double rho = 0.0;
  long holder_pairs = 0;
  long rho_pairs = 0;
  bool sandwich = true;
};

EmpiricalConfig config_of(const SpaceGrid& sg, int N, const std::vector<int>& idx) {
  std::vector<double> pts;
  for (int i : idx) pts.push_back(sg.node(i));
  return EmpiricalConfig(N, pts);
}

LipschitzStats lipschitz_stats(const HierarchySolution& sol, int pairs, std::uint64_t seed) {
  const SpaceGrid& sg = sol.space();
  const int N = sol.N();
  const SpaceGrid fine(4 * sg.nx() + 3);
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(N)));
  std::uniform_int_distribution<int> node(0, sg.nx() + 1), level(1, N), layer(0, sol.layers() - 1);
  LipschitzStats st;
  auto draw = [&](int K) {
    std::vector<int> idx(static_cast<std::size_t>(K));
    for (int& i : idx) i = node(rng);
    return idx;
  };
  std::uniform_int_distribution<int> coin(0, 1);
  auto neighbour = [&](std::vector<int> idx) {
    auto& c = idx[std::uniform_int_distribution<std::size_t>(0, idx.size() - 1)(rng)];
    c = std::clamp(c + (coin(rng) ? 1 : -1), 0, sg.nx() + 1);
    return idx;
  };
  for (int p = 0; p < pairs; ++p) {
    // Pairs cycle through fully random, one atom moved by one node, and one atom removed.
    const int kind = p % 3;
    const int K = level(rng), j = layer(rng);
    const auto x = draw(K);
    int M = level(rng), l = layer(rng);
    std::vector<int> y;
    if (kind == 0) {
      y = draw(M);
    } else if (kind == 1) {
      M = K;
      l = std::clamp(j + (coin(rng) ? 1 : -1) * coin(rng), 0, sol.layers() - 1);
      y = neighbour(x);
    } else {
      M = K - 1;
      l = j;
      y = x;
      y.erase(y.begin() + std::uniform_int_distribution<int>(0, K - 1)(rng));
    }
    const auto a = config_of(sg, N, x), b = config_of(sg, N, y);
    const double d = metric_d_fast(atoms_on_grid(a, sg), atoms_on_grid(b, sg));
    const double root = std::sqrt(std::abs(sol.layer_time(j) - sol.layer_time(l)));
    if (d + root > 0.0) {
      const double dv = std::abs(sol.node_value(K, j, x) - sol.node_value(M, l, y));
      st.holder = std::max(st.holder, dv / (root + d));
      ++st.holder_pairs;
    }
    const auto xs = draw(N);
    const auto ys = kind == 0 ? draw(N) : neighbour(xs);
    const auto aN = config_of(sg, N, xs), bN = config_of(sg, N, ys);
    const double drho = metric_d_rho_empirical(aN, bN);
    if (drho > 0.0) {
      st.rho = std::max(st.rho, std::abs(sol.node_value(N, j, xs) - sol.node_value(N, j, ys)) / drho);
      ++st.rho_pairs;
    }
    st.sandwich = st.sandwich && compare_metrics(aN, bN, fine).sandwich_ok;
  }
  return st;
}

std::string uniform_table(const char* name, const std::vector<int>& Ns, const std::vector<double>& v) {
  const double lo = v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
  const double sp = spread(v);
  std::ostringstream os;
  os << "N," << name << ",bound,spread,spread_tol,uniform\n";
  for (std::size_t j = 0; j < v.size(); ++j)
    os << Ns[j] << ',' << fmt(v[j]) << ',' << fmt(kUniformFactor * lo) << ',' << fmt(sp) << ','
       << fmt(kUniformFactor) << ',' << (sp <= kUniformFactor ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace

EstimateTables run_estimate_tables(const ExperimentConfig& cfg) {
  validate(cfg);
  const ModelSpec model = build_model(cfg);
  EstimateTables t;
  std::vector<LipschitzStats> stats(cfg.N_list.size());
  t.crude.resize(cfg.N_list.size());
  t.gradient.resize(cfg.N_list.size());
  parallel_for(static_cast<int>(cfg.N_list.size()), cfg.workers, [&](int j) {
    const auto sol = solve_level_family(cfg.N_list[static_cast<std::size_t>(j)], cfg, model);
    t.crude[static_cast<std::size_t>(j)] = check_crude_bound(sol);
    t.gradient[static_cast<std::size_t>(j)] = check_gradient_scaling(sol);
    stats[static_cast<std::size_t>(j)] = lipschitz_stats(sol, cfg.lipschitz_pairs, cfg.seed);
  });
  t.sandwich_all = true;
  for (const auto& s : stats) {
    t.holder.push_back(s.holder);
    t.rho_lip.push_back(s.rho);
    t.sandwich_all = t.sandwich_all && s.sandwich;
  }
  t.crude_uniform = spread(t.crude) <= kUniformFactor;
  t.gradient_uniform = spread(t.gradient) <= kUniformFactor;
  t.holder_uniform = spread(t.holder) <= kUniformFactor;
  t.rho_uniform = spread(t.rho_lip) <= kUniformFactor;
  t.crude_csv = uniform_table("crude_constant", cfg.N_list, t.crude);
  t.gradient_csv = uniform_table("gradient_constant", cfg.N_list, t.gradient);

  std::ostringstream os;
  const double hs = spread(t.holder), rs = spread(t.rho_lip);
  os << "N,holder_constant,holder_pairs,rho_constant,rho_pairs,holder_spread,rho_spread,spread_tol,uniform,"
        "sandwich_ok,sandwich_slack\n";
  for (std::size_t j = 0; j < stats.size(); ++j)
    os << cfg.N_list[j] << ',' << fmt(t.holder[j]) << ',' << stats[j].holder_pairs << ',' << fmt(t.rho_lip[j]) << ','
       << stats[j].rho_pairs << ',' << fmt(hs) << ',' << fmt(rs) << ',' << fmt(kUniformFactor) << ','
       << (t.holder_uniform && t.rho_uniform ? "true" : "false") << ',' << (stats[j].sandwich ? "true" : "false")
       << ',' << fmt(2.0 / (4 * cfg.nx + 4)) << '\n';
  t.lipschitz_csv = os.str();
  return t;
}

}  // namespace amfc
