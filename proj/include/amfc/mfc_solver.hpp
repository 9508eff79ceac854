#pragma once

#include <cstdint>
#include <vector>

#include "amfc/fp_solver.hpp"
#include "amfc/grid.hpp"
#include "amfc/model.hpp"

namespace amfc {

/// Backward solve of -d_t u - Lap u + H^R(x, Du) = dF/dm(m_t, x), u(T) = dG/dm(m_T, x),
/// u = 0 on the boundary. Explicit local Lax-Friedrichs Hamiltonian followed by an
/// implicit heat step. Row k of the result is u(t_k).
/// Throws CflError when dt exceeds dx / (2 theta), theta the largest local wave speed.
std::vector<std::vector<double>> solve_hjb_backward(const FPPath& m_path, const ModelSpec& model,
                                                    const TimeGrid& tg, double R);

/// alpha(t_k, x_i) = truncated feedback at the nodal gradient of u(t_k) (centered inside,
/// one-sided at the boundary).
DriftField feedback_drift(const std::vector<std::vector<double>>& u_path, const ModelSpec& model,
                          const SpaceGrid& sg, const TimeGrid& tg, double R);

/// sup over time and faces of |u_{i+1} - u_i| / dx.
double max_gradient(const std::vector<std::vector<double>>& u_path, double dx);

struct MfcOptions {
  double R = 10.0;
  double tol = 1e-5;
  int max_iter = 200;
};

struct MfcIteration {
  int iter = 0;
  double residual = 0.0;
  double cost = 0.0;
};

struct MFCSolution {
  double t0 = 0.0;
  TimeGrid time{0.0, 1.0, 1};
  std::vector<std::vector<double>> u_path;
  FPPath m_path;                   // last best-response path
  DriftField alpha_path;
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;           // sup_t d(m^k_t, best response_t)
  bool converged = false;
  bool diverged = false;
  double max_du = 0.0;             // sup |Du| along the final adjoint
  bool clamp_active = false;       // sup |Du| >= R
  double cost_low = 0.0;           // band of costs over the trailing iterations
  double cost_high = 0.0;
  std::vector<MfcIteration> history;
  MfcOptions options;
};

/// U(t0, m0) by fictitious play on the optimality system. `tg` is a grid whose
/// nodes include t0; the solve runs on its tail starting at t0. For t0 = T the
/// value is G(m0) and no dynamics is solved.
MFCSolution solve_mfc(double t0, const GridDensity& m0, const ModelSpec& model, const TimeGrid& tg,
                      const MfcOptions& opts = {});

/// |U(t0, m0) - [running cost over [t0, t0 + h] + U(t0 + h, m_{t0+h})]| with a fresh solve
/// at t0 + h. h must be a positive multiple of dt with t0 + h <= T.
double dpp_residual(const MFCSolution& sol, const ModelSpec& model, double h);

/// |U^{R1}(t0, m0) - U^{R2}(t0, m0)|.
double truncation_gap(double t0, const GridDensity& m0, const ModelSpec& model, const TimeGrid& tg,
                      double R1, double R2, const MfcOptions& opts = {});

struct RegularityModulus {
  double C_space = 0.0;  // sup |U(t,m) - U(t,n)| / d(m,n)
  double C_time = 0.0;   // sup |U(t,m) - U(s,m)| / |t-s|^{1/2}
  double C_joint = 0.0;  // sup |U(t,m) - U(s,n)| / (|t-s|^{1/2} + d(m,n))
  int pairs = 0;
};

/// Empirical space-time modulus of U over `samples` random pairs of each kind.
/// Times are grid nodes of tg drawn from a Halton sequence; measures are random densities.
RegularityModulus regularity_modulus(const ModelSpec& model, const TimeGrid& tg, const SpaceGrid& sg,
                                     int samples, std::uint64_t seed, const MfcOptions& opts = {});

struct GradientSurvey {
  std::vector<double> sup_du;  // one entry per random m-path
  double max = 0.0, min = 0.0;
};

/// sup |Du| of the backward solve against `paths` random m-paths (FP flows of random
/// densities under random bounded drifts).
GradientSurvey survey_gradients(const ModelSpec& model, const SpaceGrid& sg, const TimeGrid& tg, double R,
                                int paths, std::uint64_t seed);

}  // namespace amfc
