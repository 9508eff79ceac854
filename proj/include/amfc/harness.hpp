#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "amfc/model.hpp"

namespace amfc {

struct ExperimentConfig {
  std::string model_id = "quadratic";  // "quadratic" or "zero"
  QuadraticModelParams params;

  int nx = 24;
  int nt = 400;

  std::vector<int> N_list{1, 2, 3};
  double R = 5.0;
  int store_stride = 1;

  double mfc_tol = 1e-5;
  int mfc_max_iter = 200;
  double mfc_R = 10.0;
  int mfc_nx = 64;
  int mfc_nt = 800;
  double kappa_factor = 4.0;  // kappa = kappa_factor * dx of the limit grid

  int nsim = 100000;
  bool bridge = false;
  int substeps = 4;

  int convergence_samples = 200;
  int lipschitz_pairs = 1000;

  double barrier_C = 2.0;
  int barrier_nx = 256;

  double fp_drift = 0.0;

  std::filesystem::path out_dir = "out";
  int workers = 1;
  std::uint64_t seed = 1;
};

/// Parses a TOML file with sections [model], [grid], [hierarchy], [mfc], [mc],
/// [output] (plus optional [barrier], [fp]). Each override is "section.key=value"
/// with a TOML value; unknown keys are errors. Throws DomainError on malformed input
/// and std::runtime_error if the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_config(const std::string& toml_text, const std::vector<std::string>& overrides = {});

/// Throws DomainError unless every field is in range (positive sizes, N <= 4, and
/// mfc_nt a multiple of nt / store_stride so hierarchy layers are limit-grid nodes).
void validate(const ExperimentConfig& cfg);

ModelSpec build_model(const ExperimentConfig& cfg);

/// Runs fn(0..count-1) on a pool of `workers` threads. Results must go to
/// per-index slots; the first exception (lowest index) is rethrown.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

/// Fixed-format number for CSV output.
std::string fmt(double v);

struct ConvergenceRow {
  int N = 0;
  double error = 0.0;            // max over samples of |U(t, mollified m_x) - V(t, x)|
  int arg_K = 0;
  double arg_t = 0.0;
  std::string arg_x;
  double mollify_d_bound = 0.0;  // max d(mollified, empirical) over samples
  double mfc_residual = 0.0;     // max fixed-point residual over the limit solves
  double scheme_tol = 0.0;       // dx + dt of the hierarchy grid
  double mc_stderr = 0.0;        // unused by this study
  int samples = 0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  bool monotone = false;          // e(N_{j+1}) <= 1.1 e(N_j)
  bool improves = false;          // e(last) < e(first), or all zero
  std::string failure;            // provenance of a sub-solver failure, empty on success
  std::string csv;                // report table
  std::string samples_csv;        // one line per sample
  bool ok() const { return failure.empty() && monotone && improves; }
};

ConvergenceReport run_convergence(const ExperimentConfig& cfg);

struct EstimateTables {
  std::string crude_csv;
  std::string gradient_csv;
  std::string lipschitz_csv;
  std::vector<double> crude, gradient, holder, rho_lip;  // per N in cfg.N_list
  bool crude_uniform = false;
  bool gradient_uniform = false;
  bool holder_uniform = false;
  bool rho_uniform = false;
  bool sandwich_all = false;
  bool ok() const { return crude_uniform && gradient_uniform && holder_uniform && rho_uniform && sandwich_all; }
};

EstimateTables run_estimate_tables(const ExperimentConfig& cfg);

/// max / min of positive values; 1 for all-zero input, infinity if some but not all vanish.
double spread(const std::vector<double>& v);

/// Command-line entry point. Exit codes: 0 success, 1 usage or configuration error,
/// 2 assertion failure, 3 solver failure.
int cli_main(int argc, char** argv);

}  // namespace amfc
