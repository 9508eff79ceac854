#include <gtest/gtest.h>

#include <cmath>

#include "amfc/barrier.hpp"
#include "amfc/error.hpp"
#include "amfc/hierarchy.hpp"
#include "amfc/metric.hpp"

using namespace amfc;

TEST(Barrier, ProfileAtOrigin) {
  const auto bp = build_barrier(2.0, SpaceGrid(256));
  EXPECT_EQ(bp.psi(0.0), 0.0);
  EXPECT_NEAR(bp.psi_prime(0.0), bp.s, 1e-9 * bp.s);
  EXPECT_GE(bp.s, 4.0);
  EXPECT_EQ(bp.plus(0.0), 0.0);
  EXPECT_EQ(bp.plus(1.0), 0.0);
}

TEST(Barrier, NoViolationsAtResolution256) {
  const auto bp = build_barrier(2.0, SpaceGrid(256));
  EXPECT_GT(bp.collar_nodes, 0);
  EXPECT_EQ(bp.violations, 0);
  EXPECT_LT(bp.worst_residual, 0.0);
}

TEST(Barrier, ConclusionList) {
  const auto bp = build_barrier(2.0, SpaceGrid(256));
  const auto d = barrier_diagnostics(bp);
  EXPECT_LE(d.max_second_difference, 0.0);
  EXPECT_GE(d.min_excess_over_Cd, 0.0);
  EXPECT_GT(d.inner_value, 2.0);
  EXPECT_GT(d.min_slope, 2.0);
  EXPECT_LE(d.mirrored_residual, 0.0);
  for (std::size_t i = 0; i < bp.phi_plus.size(); ++i) {
    if (std::isnan(bp.phi_plus[i])) continue;
    EXPECT_EQ(bp.phi_minus[i], -bp.phi_plus[i]);
  }
}

TEST(Barrier, Errors) {
  EXPECT_THROW(build_barrier(0.0, SpaceGrid(64)), DomainError);
  EXPECT_THROW(build_barrier(-1.0, SpaceGrid(64)), DomainError);
  EXPECT_THROW(build_barrier(50.0, SpaceGrid(16)), SolverError);
}

TEST(Barrier, VerifiableConstantGrowsWithResolution) {
  const double c32 = max_verifiable_C(SpaceGrid(32));
  const double c256 = max_verifiable_C(SpaceGrid(256));
  EXPECT_GT(c32, 0.0);
  EXPECT_GE(c256, c32);
}

TEST(Sandwich, ZeroModel) {
  const auto sol = solve_hierarchy(2, make_zero_model(0.5), SpaceGrid(16), TimeGrid(0, 0.5, 200), {});
  const auto r = verify_sandwich(sol, build_barrier(2.0, SpaceGrid(256)));
  EXPECT_EQ(r.worst_violation, 0.0);
  EXPECT_GT(r.checked_interior, 0);
}

TEST(Sandwich, QuadraticModelTwoPlayers) {
  HierarchyOptions o;
  o.R = 8;
  const SpaceGrid sg(32);
  const TimeGrid tg(0, 0.5, 600);
  const auto sol = solve_hierarchy(2, make_quadratic_model(), sg, tg, o);
  const auto r = verify_sandwich(sol, build_barrier(2.0, SpaceGrid(256)));
  EXPECT_LE(r.worst_violation, 5 * (sg.dx() + tg.dt()));
  EXPECT_GT(r.checked_interior, 1000);
  const auto c = measure_sandwich_constants(sol);
  EXPECT_GT(c.C1, 0.0);
  EXPECT_NEAR(c.C2, check_crude_bound(sol), 1e-15);
  EXPECT_GT(c.C3, 0.0);
}
