#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "amfc/error.hpp"
#include "amfc/model.hpp"
#include "test_support.hpp"

using namespace amfc;

namespace {

// Brute-force sup over a uniform control grid.
double brute_truncated(const ModelSpec& model, double x, double p, double R, int points) {
  double best = -1e300;
  for (int k = 0; k < points; ++k) {
    const double a = -R + 2.0 * R * k / (points - 1);
    best = std::max(best, -a * p - model.lagrangian(x, a));
  }
  return best;
}

}  // namespace

TEST(Model, HamiltonianExamples) {
  const ModelSpec m = make_quadratic_model();
  EXPECT_EQ(m.hamiltonian(0.5, 0.0), 0.0);
  EXPECT_EQ(m.hamiltonian(0.5, 2.0), 2.0);
  EXPECT_EQ(m.hamiltonian(0.3, 10.0), 50.0);
  EXPECT_LE(m.hamiltonian(0.3, 10.0), 1.0 * (1.0 + 100.0));
  EXPECT_THROW(m.hamiltonian(0.5, std::nan("")), DomainError);
  EXPECT_THROW(m.hamiltonian(0.5, INFINITY), DomainError);
}

TEST(Model, TruncatedHamiltonianAgainstBruteForce) {
  const ModelSpec m = make_quadratic_model();
  const double a = brute_truncated(m, 0.5, 1.0, 2.0, 1000001);
  const double b = brute_truncated(m, 0.5, 5.0, 2.0, 1000001);
  EXPECT_NEAR(m.truncated_hamiltonian(0.5, 1.0, 2.0), a, 1e-10);
  EXPECT_NEAR(m.truncated_hamiltonian(0.5, 1.0, 2.0), 0.5, 1e-12);
  EXPECT_NEAR(m.truncated_hamiltonian(0.5, 5.0, 2.0), b, 1e-10);
  EXPECT_NEAR(m.truncated_hamiltonian(0.5, 5.0, 2.0), 8.0, 1e-12);
  for (double R : {0.1, 1.0, 7.0}) EXPECT_EQ(m.truncated_hamiltonian(0.2, 0.0, R), 0.0);
  EXPECT_THROW(m.truncated_hamiltonian(0.5, 1.0, 0.0), DomainError);
  EXPECT_THROW(m.truncated_hamiltonian(0.5, 1.0, -1.0), DomainError);
}

TEST(Model, FeedbackAndEnvelope) {
  const ModelSpec m = make_quadratic_model();
  EXPECT_EQ(m.optimal_feedback(0.5, 0.0), 0.0);
  EXPECT_EQ(m.optimal_feedback(0.5, 1.5), -1.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0.0, 1.0), up(-20.0, 20.0);
  for (int k = 0; k < 1000; ++k) {
    const double x = ux(rng), p = up(rng);
    const double a = m.optimal_feedback(x, p);
    EXPECT_NEAR(-a * p - m.lagrangian(x, a), m.hamiltonian(x, p), 1e-10);
  }
}

TEST(Model, TruncationConsistency) {
  const ModelSpec m = make_quadratic_model();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> up(-10.0, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const double p = up(rng);
    const double R = std::abs(p) + 0.1;
    EXPECT_EQ(m.truncated_hamiltonian(0.5, p, R), m.hamiltonian(0.5, p));
    double prev = -1e300;
    for (double r : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const double h = m.truncated_hamiltonian(0.5, p, r);
      EXPECT_GE(h, prev);
      prev = h;
    }
  }
}

TEST(Model, NumericControlCostMatchesClosedForm) {
  NumericControlCost num([](double, double a) { return 0.5 * a * a; }, 100.0);
  QuadraticControlCost q;
  for (double p : {-7.0, -1.0, 0.0, 0.3, 4.0}) {
    EXPECT_NEAR(num.hamiltonian(0.5, p), q.hamiltonian(0.5, p), 1e-10);
    EXPECT_NEAR(num.truncated_hamiltonian(0.5, p, 2.0), q.truncated_hamiltonian(0.5, p, 2.0), 1e-10);
    EXPECT_NEAR(num.truncated_feedback(0.5, p, 2.0), q.truncated_feedback(0.5, p, 2.0), 1e-6);
  }
}

TEST(Model, CostFunctionalExamples) {
  const ModelSpec m = make_quadratic_model();
  const SpaceGrid sg(400);
  const auto zero = m.eval_cost_functionals(GridDensity::zero(sg));
  EXPECT_EQ(zero.F, 0.0);
  EXPECT_EQ(zero.G, 0.0);
  EXPECT_EQ(m.F_zero(), 0.0);

  // Uniform density 1 on (0,1), evaluated with the exact moments.
  const double y = 2.0 / std::numbers::pi;
  const std::vector<double> moments{y, y};
  EXPECT_NEAR(m.running().value(moments), 0.8392, 1e-4);
  EXPECT_NEAR(m.running().value(moments), y + 0.5 * y * y, 1e-15);
  // Grid version agrees to quadrature accuracy.
  const auto uni = GridDensity::from_function(sg, [](double) { return 1.0; });
  EXPECT_NEAR(m.eval_cost_functionals(uni).F, y + 0.5 * y * y, 1e-4);

  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto c = m.eval_cost_functionals(testkit::random_density(sg, rng));
    EXPECT_EQ(c.dF.front(), 0.0);
    EXPECT_NEAR(c.dF.back(), 0.0, 1e-15);
    EXPECT_NEAR(c.dG.back(), 0.0, 1e-15);
  }
}

TEST(Model, MassAboveOneRejected) {
  const SpaceGrid sg(10);
  // A GridDensity cannot carry mass above one, so the check is reached only through it.
  std::vector<double> v(12, 1.2);
  v.front() = v.back() = 0.0;
  EXPECT_THROW(GridDensity(sg, v), InvariantViolation);
}

TEST(Model, DerivativeMatchesDifferenceQuotient) {
  const ModelSpec m = make_quadratic_model();
  const SpaceGrid sg(64);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 1.0);
  const double eps = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const GridDensity base = testkit::random_density(sg, rng);
    std::vector<double> d(static_cast<std::size_t>(sg.size()), 0.0);
    for (int i = 1; i <= sg.nx(); ++i) d[static_cast<std::size_t>(i)] = n(rng);
    std::vector<double> moved(base.values().begin(), base.values().end());
    for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += eps * d[i];
    const auto c = m.eval_cost_functionals(base);
    double pair_F = 0.0, pair_G = 0.0;
    for (int i = 1; i <= sg.nx(); ++i) {
      pair_F += c.dF[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)] * sg.dx();
      pair_G += c.dG[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)] * sg.dx();
    }
    // Evaluate the functional on the perturbed vector through moments directly (it may be signed).
    auto value = [&](const MomentFunctional& fn, const std::vector<double>& v) {
      std::vector<double> y(fn.moment_count());
      for (std::size_t j = 0; j < y.size(); ++j) {
        double s = 0.0;
        for (int i = 1; i <= sg.nx(); ++i) s += fn.test(j).value(sg.node(i)) * v[static_cast<std::size_t>(i)];
        y[j] = s * sg.dx();
      }
      return fn.value(y);
    };
    const std::vector<double> bv(base.values().begin(), base.values().end());
    EXPECT_LE(std::abs((value(m.running(), moved) - value(m.running(), bv)) / eps - pair_F), 10 * eps);
    EXPECT_LE(std::abs((value(m.terminal(), moved) - value(m.terminal(), bv)) / eps - pair_G), 10 * eps);
  }
}

TEST(Model, StandingAssumptions) {
  const ModelSpec m = make_quadratic_model();
  std::vector<double> xs, as;
  for (int i = 0; i <= 10; ++i) xs.push_back(i / 10.0);
  for (int i = -20; i <= 20; ++i) as.push_back(i * 0.5);
  EXPECT_LE(convexity_violation(m, xs, as), 1e-12);

  const SpaceGrid sg(128);
  std::mt19937_64 rng(5);
  std::vector<GridDensity> ms, ns;
  for (int k = 0; k < 50; ++k) {
    ms.push_back(testkit::random_density(sg, rng));
    ns.push_back(testkit::random_density(sg, rng));
  }
  EXPECT_LE(boundary_derivative_max(m, ms), 1e-12);
  EXPECT_LE(lipschitz_excess(m, ms, ns), 1e-12);

  const ModelSpec z = make_zero_model(0.5);
  EXPECT_EQ(z.F_zero(), 0.0);
  EXPECT_EQ(z.eval_cost_functionals(ms[0]).G, 0.0);
}
