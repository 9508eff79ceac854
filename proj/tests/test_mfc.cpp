#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "amfc/error.hpp"
#include "amfc/mfc_solver.hpp"
#include "amfc/sampling.hpp"

using namespace amfc;

namespace {

GridDensity sine_density(const SpaceGrid& sg) {
  return GridDensity::from_function(sg, [](double x) { return std::sin(std::numbers::pi * x); });
}

FPPath empty_path(const SpaceGrid& sg, const TimeGrid& tg) {
  return solve_fp(GridDensity::zero(sg), DriftField::constant(sg, tg, 0.0), tg);
}

double hjb_center_value(int nx) {
  const SpaceGrid sg(nx);
  const TimeGrid tg(0, 0.5, 16 * (nx + 1));
  const auto u = solve_hjb_backward(empty_path(sg, tg), make_quadratic_model(), tg, 10.0);
  return u.front()[static_cast<std::size_t>((nx + 1) / 2)];
}

}  // namespace

TEST(Hjb, ZeroDataGivesZero) {
  const SpaceGrid sg(32);
  const TimeGrid tg(0, 0.5, 200);
  for (const auto& row : solve_hjb_backward(empty_path(sg, tg), make_zero_model(0.5), tg, 5.0))
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(Hjb, EmptyPathSelfConvergence) {
  const double a = hjb_center_value(63), b = hjb_center_value(127), c = hjb_center_value(255);
  const double ratio = (b - a) / (c - b);
  EXPECT_GT(ratio, 1.4);
  EXPECT_LT(ratio, 2.6);
  const double extrapolated = 2 * c - b;
  EXPECT_NEAR(extrapolated, 0.10389, 5e-5);
  RecordProperty("u_center_extrapolated", std::to_string(extrapolated));
}

TEST(Hjb, BoundaryRowsAreZeroAndCflIsChecked) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0, 0.5, 1024);
  const auto u = solve_hjb_backward(solve_fp(sine_density(sg), DriftField::constant(sg, tg, 0.0), tg),
                                    make_quadratic_model(), tg, 10.0);
  for (const auto& row : u) {
    EXPECT_EQ(row.front(), 0.0);
    EXPECT_EQ(row.back(), 0.0);
  }
  QuadraticModelParams p;
  p.lin_G = 40.0;
  const TimeGrid coarse(0, 0.5, 40);
  EXPECT_THROW(solve_hjb_backward(empty_path(sg, coarse), make_quadratic_model(p), coarse, 50.0), CflError);
}

TEST(Mfc, ZeroModel) {
  const SpaceGrid sg(32);
  const auto s = solve_mfc(0.0, sine_density(sg), make_zero_model(0.5), TimeGrid(0, 0.5, 256));
  EXPECT_EQ(s.value, 0.0);
  EXPECT_EQ(s.iterations, 1);
  EXPECT_TRUE(s.converged);
  EXPECT_EQ(s.alpha_path.bound(), 0.0);
}

TEST(Mfc, EmptyHorizon) {
  const SpaceGrid sg(32);
  const auto model = make_quadratic_model();
  const auto m0 = sine_density(sg);
  const auto s = solve_mfc(0.5, m0, model, TimeGrid(0, 0.5, 256));
  EXPECT_EQ(s.value, model.terminal().value(m0));
}

TEST(Mfc, ZeroMeasureIdentity) {
  QuadraticModelParams p;
  p.offset_F = 0.3;
  p.offset_G = -0.7;
  const auto model = make_quadratic_model(p);
  const SpaceGrid sg(32);
  const TimeGrid tg(0, 0.5, 256);
  for (int k : {0, 64, 200}) {
    const double t = tg.time(k);
    const auto s = solve_mfc(t, GridDensity::zero(sg), model, tg);
    EXPECT_NEAR(s.value, model.G_zero() + (0.5 - t) * model.F_zero(), 1e-12);
  }
}

TEST(Mfc, QuadraticFixedPoint) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0, 0.5, 1024);
  const auto model = make_quadratic_model();
  const auto m0 = sine_density(sg);
  const auto s = solve_mfc(0.0, m0, model, tg, {10.0, 1e-5, 200});
  EXPECT_TRUE(s.converged);
  EXPECT_LT(s.residual, 1e-4);
  EXPECT_LE(s.iterations, 200);
  EXPECT_FALSE(s.clamp_active);
  EXPECT_LE(s.cost_high - s.cost_low, 1e-6);
  const auto zero = DriftField::constant(sg, tg, 0.0);
  EXPECT_LT(s.value, evaluate_cost(solve_fp(m0, zero, tg), zero, model));
  for (int k = 0; k <= tg.nt(); ++k)
    for (int i = 0; i < sg.size(); ++i)
      EXPECT_NEAR(s.alpha_path.at(k, i),
                  -std::clamp((i == 0 ? s.u_path[k][1] - s.u_path[k][0]
                               : i == sg.nx() + 1 ? s.u_path[k][i] - s.u_path[k][i - 1]
                                                  : 0.5 * (s.u_path[k][i + 1] - s.u_path[k][i - 1])) /
                                  sg.dx(),
                              -10.0, 10.0),
                  1e-12);
}

TEST(Mfc, ValueSelfConvergence) {
  const auto model = make_quadratic_model();
  double prev = 0.0;
  for (int nx : {32, 64, 128}) {
    const SpaceGrid sg(nx);
    const double U = solve_mfc(0.0, sine_density(sg), model, TimeGrid(0, 0.5, 16 * nx)).value;
    if (nx > 32) EXPECT_NEAR(U, prev, 1e-4);
    prev = U;
  }
}

TEST(Mfc, DynamicProgramming) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0, 0.5, 1000);
  const auto model = make_quadratic_model();
  const auto s = solve_mfc(0.0, sine_density(sg), model, tg);
  EXPECT_LE(dpp_residual(s, model, 0.1), 5e-3);
  EXPECT_LE(dpp_residual(s, model, 0.5), 1e-12);
  const auto z = solve_mfc(0.0, sine_density(sg), make_zero_model(0.5), tg);
  EXPECT_EQ(dpp_residual(z, make_zero_model(0.5), 0.1), 0.0);
  EXPECT_THROW(dpp_residual(s, model, 0.10001), DomainError);
}

TEST(Mfc, TruncationStability) {
  const SpaceGrid sg(64);
  const TimeGrid tg(0, 0.5, 1024);
  const auto model = make_quadratic_model();
  const auto m0 = sine_density(sg);
  EXPECT_EQ(truncation_gap(0.0, m0, model, tg, 10.0, 10.0), 0.0);
  EXPECT_LE(truncation_gap(0.0, m0, model, tg, 10.0, 20.0), 1e-6);
  EXPECT_GT(truncation_gap(0.0, m0, model, tg, 0.01, 20.0), 1e-4);
}

TEST(Mfc, GradientBoundUniformOverPaths) {
  const auto survey = survey_gradients(make_quadratic_model(), SpaceGrid(64), TimeGrid(0, 0.5, 1024), 10.0, 20, 11);
  ASSERT_EQ(survey.sup_du.size(), 20u);
  EXPECT_GT(survey.min, 0.0);
  EXPECT_LE(survey.max, 2.0 * survey.min);
  EXPECT_LT(survey.max + 1.0, 10.0);
}

TEST(Mfc, RegularityModulus) {
  const auto model = make_quadratic_model();
  const TimeGrid tg(0, 0.5, 200);
  const SpaceGrid sg(24);
  const auto zero = regularity_modulus(make_zero_model(0.5), tg, sg, 10, 3);
  EXPECT_EQ(zero.C_space, 0.0);
  EXPECT_EQ(zero.C_time, 0.0);
  const auto a = regularity_modulus(model, tg, sg, 50, 3);
  const auto b = regularity_modulus(model, tg, sg, 100, 3);
  EXPECT_GT(a.C_space, 0.0);
  EXPECT_GT(a.C_time, 0.0);
  EXPECT_NEAR(b.C_space / a.C_space, 1.0, 0.2);
  EXPECT_NEAR(b.C_time / a.C_time, 1.0, 0.2);
}

TEST(Sampling, Halton) {
  EXPECT_EQ(halton(1, 2), 0.5);
  EXPECT_EQ(halton(2, 2), 0.25);
  EXPECT_EQ(halton(3, 2), 0.75);
  EXPECT_NEAR(halton(1, 3), 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(halton(5, 3), 7.0 / 9.0, 1e-15);
  EXPECT_THROW(halton_point(1, 17), DomainError);
}
