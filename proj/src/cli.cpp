#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "amfc/barrier.hpp"
#include "amfc/error.hpp"
#include "amfc/fp_solver.hpp"
#include "amfc/harness.hpp"
#include "amfc/hierarchy.hpp"
#include "amfc/metric.hpp"
#include "amfc/mfc_solver.hpp"
#include "amfc/monte_carlo.hpp"
#include "amfc/tensor_io.hpp"

namespace amfc {

namespace {

constexpr int kAssertionFailed = 2;

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

ExperimentConfig resolve(const CommonArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? parse_config("", a.overrides) : load_config(a.config, a.overrides);
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.seed_given) cfg.seed = a.seed;
  std::filesystem::create_directories(cfg.out_dir);
  return cfg;
}

GridDensity sine_density(const SpaceGrid& sg) {
  return GridDensity::from_function(sg, [](double x) { return std::sin(std::numbers::pi * x); });
}

EmpiricalConfig parse_atoms(const std::string& spec, int denom) {
  const std::string prefix = "atoms:";
  if (spec.rfind(prefix, 0) != 0) throw DomainError("measure must look like atoms:x1,x2,...: " + spec);
  std::vector<double> pts;
  std::stringstream ss(spec.substr(prefix.size()));
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty()) throw DomainError("bad atom '" + item + "' in " + spec);
    if (v < 0.0 || v > 1.0) throw DomainError("atom outside [0,1]: " + item);
    pts.push_back(v);
  }
  if (static_cast<int>(pts.size()) > denom) throw DomainError("more atoms than the denominator");
  return EmpiricalConfig(denom, pts);
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

int cmd_solve_hierarchy(const ExperimentConfig& cfg, bool with_mc) {
  const ModelSpec model = build_model(cfg);
  std::ostringstream csv, mc;
  csv << "N,crude_constant,gradient_constant,compat_defect,level_zero_defect,symmetry_defect,exact_tol,symmetry_tol\n";
  mc << "N,t0,x0,fd_value,mc_estimate,mc_stderr,tol,pass\n";
  bool ok = true;
  for (int N : cfg.N_list) {
    HierarchyOptions o;
    o.R = cfg.R;
    o.store_stride = cfg.store_stride;
    const auto sol = solve_hierarchy(N, model, SpaceGrid(cfg.nx), TimeGrid(0.0, cfg.params.T, cfg.nt), o);
    dump_hierarchy(sol, cfg.out_dir / ("hierarchy_N" + std::to_string(N)));
    const double cd = compatibility_defect(sol), lz = level_zero_defect(sol), sd = symmetry_defect(sol);
    ok = ok && cd == 0.0 && lz == 0.0 && sd <= 1e-12;
    csv << N << ',' << fmt(check_crude_bound(sol)) << ',' << fmt(check_gradient_scaling(sol)) << ',' << fmt(cd) << ','
        << fmt(lz) << ',' << fmt(sd) << ',' << fmt(0.0) << ',' << fmt(1e-12) << '\n';
    if (with_mc) {
      const std::vector<double> x0(static_cast<std::size_t>(N), 0.5);
      MonteCarloOptions mo;
      mo.nsim = cfg.nsim;
      mo.seed = cfg.seed;
      mo.bridge = cfg.bridge;
      mo.substeps = cfg.substeps;
      const auto r = monte_carlo_value(sol, 0.0, x0, mo);
      const double fd = eval_value(sol, N, 0.0, x0);
      const double tol = 3 * r.stderr_ + 5e-2;
      const bool pass = std::abs(fd - r.estimate) <= tol;
      ok = ok && pass;
      mc << N << ',' << fmt(0.0) << ',' << fmt(0.5) << ',' << fmt(fd) << ',' << fmt(r.estimate) << ','
         << fmt(r.stderr_) << ',' << fmt(tol) << ',' << bool_str(pass) << '\n';
    }
  }
  write_text_atomic(cfg.out_dir / "hierarchy.csv", csv.str());
  if (with_mc) write_text_atomic(cfg.out_dir / "mc.csv", mc.str());
  std::cout << csv.str();
  if (with_mc) std::cout << mc.str();
  return ok ? 0 : kAssertionFailed;
}

int cmd_solve_mfc(const ExperimentConfig& cfg) {
  const ModelSpec model = build_model(cfg);
  const SpaceGrid sg(cfg.mfc_nx);
  const TimeGrid tg(0.0, cfg.params.T, cfg.mfc_nt);
  const auto sol = solve_mfc(0.0, sine_density(sg), model, tg, {cfg.mfc_R, cfg.mfc_tol, cfg.mfc_max_iter});
  if (sol.diverged) throw SolverError("fictitious play diverged");
  std::ostringstream hist;
  hist << "iter,residual,cost,tol\n";
  for (const auto& h : sol.history) hist << h.iter << ',' << fmt(h.residual) << ',' << fmt(h.cost) << ',' << fmt(cfg.mfc_tol) << '\n';
  std::ostringstream val;
  val << "value,residual,tol,iterations,converged,max_du,R,clamp_active,cost_low,cost_high\n"
      << fmt(sol.value) << ',' << fmt(sol.residual) << ',' << fmt(cfg.mfc_tol) << ',' << sol.iterations << ','
      << bool_str(sol.converged) << ',' << fmt(sol.max_du) << ',' << fmt(cfg.mfc_R) << ',' << bool_str(sol.clamp_active)
      << ',' << fmt(sol.cost_low) << ',' << fmt(sol.cost_high) << '\n';
  write_text_atomic(cfg.out_dir / "mfc_history.csv", hist.str());
  write_text_atomic(cfg.out_dir / "mfc_value.csv", val.str());
  dump_rows(sol.u_path, sg.nx(), cfg.out_dir / "mfc_u.amfc");
  dump_path(sol.m_path, cfg.out_dir / "mfc_m.amfc");
  std::cout << val.str();
  return sol.converged ? 0 : kAssertionFailed;
}

int cmd_fp_run(const ExperimentConfig& cfg) {
  const SpaceGrid sg(cfg.nx);
  const TimeGrid tg(0.0, cfg.params.T, cfg.nt);
  const auto alpha = DriftField::constant(sg, tg, cfg.fp_drift);
  const auto path = solve_fp(sine_density(sg), alpha, tg);
  const double residual = l2_energy_residual(path, alpha);
  bool monotone = true;
  std::ostringstream csv;
  csv << "k,t,mass,mass_increase,mass_tol\n";
  for (int k = 0; k <= tg.nt(); ++k) {
    const double inc = k == 0 ? 0.0 : path.masses[static_cast<std::size_t>(k)] - path.masses[static_cast<std::size_t>(k - 1)];
    monotone = monotone && inc <= 0.0;
    csv << k << ',' << fmt(tg.time(k)) << ',' << fmt(path.masses[static_cast<std::size_t>(k)]) << ',' << fmt(inc) << ','
        << fmt(0.0) << '\n';
  }
  std::ostringstream sum;
  sum << "energy_residual,energy_tol,clamped_mass,mass_nonincreasing\n"
      << fmt(residual) << ',' << fmt(0.05) << ',' << fmt(path.clamped_mass) << ',' << bool_str(monotone) << '\n';
  write_text_atomic(cfg.out_dir / "fp_mass.csv", csv.str());
  write_text_atomic(cfg.out_dir / "fp_summary.csv", sum.str());
  dump_path(path, cfg.out_dir / "fp_m.amfc");
  std::cout << sum.str();
  return monotone && residual <= 0.05 ? 0 : kAssertionFailed;
}

int cmd_barrier(const ExperimentConfig& cfg) {
  const ModelSpec model = build_model(cfg);
  const SpaceGrid bg(cfg.barrier_nx);
  const auto bp = build_barrier(cfg.barrier_C, bg);
  std::ostringstream csv;
  csv << "N,C,Cp,s,epsilon,collar_nodes,violations,worst_violation,tol,checked,checked_interior,C1,C2,C3,"
         "max_verifiable_C\n";
  const double cmax = max_verifiable_C(bg);
  bool ok = bp.violations == 0;
  for (int N : cfg.N_list) {
    HierarchyOptions o;
    o.R = cfg.R;
    o.store_stride = cfg.store_stride;
    const SpaceGrid sg(cfg.nx);
    const TimeGrid tg(0.0, cfg.params.T, cfg.nt);
    const auto sol = solve_hierarchy(N, model, sg, tg, o);
    const auto rep = verify_sandwich(sol, bp);
    const auto c = measure_sandwich_constants(sol);
    const double tol = 5 * (sg.dx() + tg.dt());
    ok = ok && rep.worst_violation <= tol;
    csv << N << ',' << fmt(bp.C) << ',' << fmt(bp.Cp) << ',' << fmt(bp.s) << ',' << fmt(bp.epsilon) << ','
        << bp.collar_nodes << ',' << bp.violations << ',' << fmt(rep.worst_violation) << ',' << fmt(tol) << ','
        << rep.checked << ',' << rep.checked_interior << ',' << fmt(c.C1) << ',' << fmt(c.C2) << ',' << fmt(c.C3)
        << ',' << fmt(cmax) << '\n';
  }
  write_text_atomic(cfg.out_dir / "barrier.csv", csv.str());
  std::cout << csv.str();
  return ok ? 0 : kAssertionFailed;
}

int cmd_converge(const ExperimentConfig& cfg) {
  const auto rep = run_convergence(cfg);
  write_text_atomic(cfg.out_dir / "report.csv", rep.csv);
  write_text_atomic(cfg.out_dir / "samples.csv", rep.samples_csv);
  std::ostringstream dat;
  for (const auto& r : rep.rows) dat << r.N << ' ' << fmt(r.error) << '\n';
  write_text_atomic(cfg.out_dir / "error_vs_N.dat", dat.str());
  std::cout << rep.csv;
  if (!rep.failure.empty()) {
    std::cerr << "sub-solver failure: " << rep.failure << '\n';
    return 3;
  }
  if (!rep.ok()) std::cerr << "assertion failed: e(N) is not nonincreasing within 10% or e(last) >= e(first)\n";
  return rep.ok() ? 0 : kAssertionFailed;
}

int cmd_tables(const ExperimentConfig& cfg) {
  const auto t = run_estimate_tables(cfg);
  write_text_atomic(cfg.out_dir / "crude.csv", t.crude_csv);
  write_text_atomic(cfg.out_dir / "gradient.csv", t.gradient_csv);
  write_text_atomic(cfg.out_dir / "lipschitz.csv", t.lipschitz_csv);
  std::cout << t.crude_csv << t.gradient_csv << t.lipschitz_csv;
  if (!t.ok()) std::cerr << "assertion failed: an estimate varies by more than a factor 2 across N\n";
  return t.ok() ? 0 : kAssertionFailed;
}

void add_common(CLI::App* sub, CommonArgs& a, bool config_required) {
  auto* c = sub->add_option("--config", a.config, "TOML configuration file");
  if (config_required) c->required();
  sub->add_option("--set", a.overrides, "Override section.key=value (repeatable)");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&a](const std::uint64_t& s) { a.seed = s; a.seed_given = true; }, "Random seed");
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Finite-player and mean-field control solvers on the unit interval"};
  app.require_subcommand(1);
  CommonArgs args;
  bool with_mc = false;
  std::string a_spec, b_spec;
  int denom = 0;

  auto* sh = app.add_subcommand("solve-hierarchy", "Solve the value hierarchy for each N and dump tensors");
  add_common(sh, args, true);
  sh->add_flag("--mc", with_mc, "Cross-check V^{N,N}(0, 1/2) by Monte Carlo");
  auto* sm = app.add_subcommand("solve-mfc", "Solve the mean-field control problem from m0 = sin(pi x)");
  add_common(sm, args, true);
  auto* fp = app.add_subcommand("fp-run", "Run the Fokker-Planck solver from m0 = sin(pi x) under a constant drift");
  add_common(fp, args, true);
  auto* me = app.add_subcommand("metric", "Matching distance between two empirical measures");
  add_common(me, args, false);
  me->add_option("--a", a_spec, "atoms:x1,x2,...")->required();
  me->add_option("--b", b_spec, "atoms:y1,y2,...")->required();
  me->add_option("--denom", denom, "Common denominator N")->required()->check(CLI::Range(1, 64));
  auto* bc = app.add_subcommand("barrier-check", "Build the boundary barrier and verify the sandwich");
  add_common(bc, args, true);
  auto* cv = app.add_subcommand("converge", "Convergence study of the finite-player values");
  add_common(cv, args, true);
  auto* tb = app.add_subcommand("tables", "Uniform-in-N estimate tables");
  add_common(tb, args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return 1;
  }

  try {
    if (*sh) return cmd_solve_hierarchy(cfg, with_mc);
    if (*sm) return cmd_solve_mfc(cfg);
    if (*fp) return cmd_fp_run(cfg);
    if (*me) {
      const auto a = parse_atoms(a_spec, denom), b = parse_atoms(b_spec, denom);
      const double d = metric_d_rho_empirical(a, b);
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.12g", d);
      std::cout << buf << '\n';
      if (!args.out.empty())
        write_text_atomic(cfg.out_dir / "metric.csv",
                          "a,b,denom,d_rho,exact_tol\n\"" + a_spec + "\",\"" + b_spec + "\"," + std::to_string(denom) +
                              ',' + fmt(d) + ',' + fmt(0.0) + '\n');
      return 0;
    }
    if (*bc) return cmd_barrier(cfg);
    if (*cv) return cmd_converge(cfg);
    if (*tb) return cmd_tables(cfg);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const InvariantViolation& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const MemoryGuardError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace amfc
