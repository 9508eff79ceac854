#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "amfc/error.hpp"
#include "amfc/fp_solver.hpp"
#include "amfc/metric.hpp"
#include "amfc/model.hpp"
#include "amfc/tridiag.hpp"
#include "test_support.hpp"

using namespace amfc;
using std::numbers::pi;

namespace {

GridDensity sine_density(const SpaceGrid& sg) {
  return GridDensity::from_function(sg, [](double x) { return std::sin(pi * x); });
}

double sup_error_vs_heat(const FPPath& p, const SpaceGrid& sg, double elapsed) {
  const auto& m = p.at(p.time.nt());
  double worst = 0.0;
  for (int i = 0; i < sg.size(); ++i)
    worst = std::max(worst, std::abs(m[i] - std::exp(-pi * pi * elapsed) * std::sin(pi * sg.node(i))));
  return worst;
}

}  // namespace

TEST(Tridiag, GeneralAndPrefactoredAgree) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 17;
  const double lambda = 3.7;
  std::vector<double> line(n + 2);
  for (double& v : line) v = u(rng);
  std::vector<double> sub(n, -lambda), diag(n, 1 + 2 * lambda), sup(n, -lambda), rhs(n);
  for (int i = 0; i < n; ++i) rhs[static_cast<std::size_t>(i)] = line[static_cast<std::size_t>(i + 1)];
  rhs.front() += lambda * line.front();
  rhs.back() += lambda * line.back();
  solve_tridiagonal(sub, diag, sup, rhs);
  ImplicitLaplacian(n, lambda).solve_line(line.data(), 1);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(line[static_cast<std::size_t>(i + 1)], rhs[static_cast<std::size_t>(i)], 1e-14);
  // Residual check of the prefactored solve against the original equations.
  std::vector<double> zero(3, 0.0), d2{2.0, 2.0, 2.0};
  EXPECT_THROW(solve_tridiagonal(zero, zero, zero, d2), SolverError);
}

TEST(FP, HeatEigenfunction) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0.0, 0.1, 4096);
  const auto path = solve_fp(sine_density(sg), DriftField::constant(sg, tg, 0.0), tg);
  const double dx = sg.dx();
  EXPECT_LE(sup_error_vs_heat(path, sg, 0.1), 5 * (dx * dx + tg.dt()));
}

TEST(FP, ZeroDensityStaysZero) {
  const SpaceGrid sg(32);
  const TimeGrid tg(0.0, 0.2, 100);
  const auto path = solve_fp(GridDensity::zero(sg), DriftField::constant(sg, tg, 1.0), tg);
  for (const auto& m : path.densities)
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(l2_energy_residual(path, DriftField::constant(sg, tg, 1.0)), 0.0);
}

TEST(FP, MassStrictlyDecreasing) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0.0, 0.5, 4096);
  const DriftField alpha = DriftField::constant(sg, tg, 1.0);
  const auto path = solve_fp(sine_density(sg), alpha, tg);
  for (int k = 0; k < tg.nt(); ++k)
    EXPECT_LT(path.masses[static_cast<std::size_t>(k + 1)], path.masses[static_cast<std::size_t>(k)]);
  EXPECT_LE(l2_energy_residual(path, alpha), 0.05);
  EXPECT_EQ(path.clamped_mass, 0.0);
}

TEST(FP, CflRejected) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0.0, 0.5, 10);
  try {
    solve_fp(sine_density(sg), DriftField::constant(sg, tg, 5.0), tg);
    FAIL() << "expected CflError";
  } catch (const CflError& e) {
    EXPECT_GE(e.suggested_nt(), static_cast<int>(std::ceil(0.5 * 2 * 5.0 / sg.dx())));
  }
}

TEST(FP, EnergyResidualHalvesUnderRefinement) {
  auto residual = [](int nx, int nt) {
    const SpaceGrid sg(nx);
    const TimeGrid tg(0.0, 0.1, nt);
    const auto a = DriftField::constant(sg, tg, 0.0);
    return l2_energy_residual(solve_fp(sine_density(sg), a, tg), a);
  };
  const double coarse = residual(31, 200), fine = residual(63, 400);
  EXPECT_GT(coarse, 0.0);
  EXPECT_NEAR(fine / coarse, 0.5, 0.25);
}

TEST(FP, ComparisonPrinciple) {
  const SpaceGrid sg(48);
  const TimeGrid tg(0.0, 0.2, 400);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> drift(static_cast<std::size_t>((tg.nt() + 1) * sg.size()));
  for (double& v : drift) v = 2.0 * u(rng);
  const DriftField alpha(sg, tg, drift);
  for (int trial = 0; trial < 10; ++trial) {
    const auto lo = testkit::random_density(sg, rng);
    std::vector<double> hi(lo.values().begin(), lo.values().end());
    for (int i = 1; i <= sg.nx(); ++i) hi[static_cast<std::size_t>(i)] *= 0.999;
    std::vector<double> bumped(lo.values().begin(), lo.values().end());
    for (int i = 1; i <= sg.nx(); ++i) bumped[static_cast<std::size_t>(i)] = hi[static_cast<std::size_t>(i)] * 0.5;
    const auto a = solve_fp(GridDensity(sg, bumped), alpha, tg);
    const auto b = solve_fp(GridDensity(sg, hi), alpha, tg);
    for (int k = 0; k <= tg.nt(); ++k)
      for (int i = 0; i < sg.size(); ++i) EXPECT_LE(a.at(k)[i], b.at(k)[i]);
  }
}

TEST(FP, BackwardTransportEigenfunctionAndDuality) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0.0, 0.1, 2048);
  std::vector<double> phi(static_cast<std::size_t>(sg.size()));
  for (int i = 0; i < sg.size(); ++i) phi[static_cast<std::size_t>(i)] = std::sin(pi * sg.node(i));
  phi.back() = 0.0;
  const auto heat = solve_backward_transport(phi, DriftField::constant(sg, tg, 0.0), tg);
  double worst = 0.0;
  for (int i = 0; i < sg.size(); ++i)
    worst = std::max(worst, std::abs(heat[0][static_cast<std::size_t>(i)] - std::exp(-pi * pi * 0.1) * phi[static_cast<std::size_t>(i)]));
  EXPECT_LE(worst, 5 * (sg.dx() * sg.dx() + tg.dt()));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> drift(static_cast<std::size_t>((tg.nt() + 1) * sg.size()));
  for (std::size_t k = 0; k < drift.size(); ++k) drift[k] = 3.0 * std::sin(0.01 * static_cast<double>(k));
  const DriftField alpha(sg, tg, drift);
  const auto f = solve_backward_transport(phi, alpha, tg);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m0 = testkit::random_density(sg, rng), m1 = testkit::random_density(sg, rng);
    const auto p0 = solve_fp(m0, alpha, tg), p1 = solve_fp(m1, alpha, tg);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 1; i <= sg.nx(); ++i) {
      lhs += phi[static_cast<std::size_t>(i)] * (p1.at(tg.nt())[i] - p0.at(tg.nt())[i]) * sg.dx();
      rhs += f[0][static_cast<std::size_t>(i)] * (m1[i] - m0[i]) * sg.dx();
    }
    EXPECT_NEAR(lhs, rhs, 1e-12);
  }
  EXPECT_LE(max_abs_gradient(f[0], sg.dx()), 10.0 * max_abs_gradient(phi, sg.dx()));
  EXPECT_THROW(solve_backward_transport(std::vector<double>(static_cast<std::size_t>(sg.size()), 1.0), alpha, tg),
               DomainError);
}

TEST(FP, MetricStability) {
  const SpaceGrid sg(48);
  const TimeGrid tg(0.0, 0.3, 600);
  std::vector<double> drift(static_cast<std::size_t>((tg.nt() + 1) * sg.size()));
  for (std::size_t k = 0; k < drift.size(); ++k) drift[k] = 2.0 * std::cos(0.37 * static_cast<double>(k % 50));
  const DriftField alpha(sg, tg, drift);
  std::mt19937_64 rng(4);
  double C = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto m0 = testkit::random_density(sg, rng), m1 = testkit::random_density(sg, rng);
    const auto p0 = solve_fp(m0, alpha, tg), p1 = solve_fp(m1, alpha, tg);
    const double d0 = metric_d_fast(m0, m1);
    for (int k = 0; k <= tg.nt(); k += 50) C = std::max(C, metric_d_fast(p0.at(k), p1.at(k)) / d0);
  }
  EXPECT_TRUE(std::isfinite(C));
  EXPECT_LE(C, 10.0);
}

TEST(FP, CostOfZeroDriftHeatFlow) {
  const ModelSpec model = make_quadratic_model();
  const SpaceGrid sg(128);
  const double T = model.horizon();
  const TimeGrid tg(0.0, T, 2000);
  const auto alpha = DriftField::constant(sg, tg, 0.0);
  const auto path = solve_fp(sine_density(sg), alpha, tg);
  // <sin(pi.), m_t> = (1/2) e^{-pi^2 t}; F = y + y^2/2 with y that moment.
  auto y = [](double t) { return 0.5 * std::exp(-pi * pi * t); };
  const double a = pi * pi;
  const double integral = (1 - std::exp(-a * T)) / (2 * a) + 0.125 * (1 - std::exp(-2 * a * T)) / (2 * a);
  const double exact = integral + y(T) + 0.5 * y(T) * y(T);
  EXPECT_NEAR(evaluate_cost(path, alpha, model), exact, 1e-3);
  const ModelSpec zero = make_zero_model(T);
  EXPECT_EQ(evaluate_cost(path, alpha, zero), 0.0);
}
