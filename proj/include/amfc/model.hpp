#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "amfc/grid.hpp"

namespace amfc {

/// Smooth function on [0,1] together with its derivative.
struct TestFunction {
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static TestFunction sine();  // sin(pi x), vanishes on the boundary
  static TestFunction zero();
};

/// Cost functional of the form F(m) = Phi(<psi_1, m>, ..., <psi_k, m>).
///
/// The linear derivative is dF/dm(m, x) = sum_j dPhi/dy_j(moments) * psi_j(x),
/// so every such functional has a closed-form derivative field.
class MomentFunctional {
 public:
  using Outer = std::function<double(std::span<const double>)>;
  using OuterGradient = std::function<void(std::span<const double>, std::span<double>)>;

  MomentFunctional(std::vector<TestFunction> tests, Outer outer, OuterGradient gradient);

  /// offset + lin * <f, m> + quad * <w, m>^2
  static MomentFunctional linear_quadratic(double offset, double lin, TestFunction f, double quad,
                                           TestFunction w);

  std::size_t moment_count() const { return tests_.size(); }
  const TestFunction& test(std::size_t j) const { return tests_[j]; }

  std::vector<double> moments(const GridDensity& m) const;
  std::vector<double> moments(const EmpiricalConfig& m) const;

  double value(std::span<const double> moments) const { return outer_(moments); }
  double value(const GridDensity& m) const { return value(moments(m)); }
  double value(const EmpiricalConfig& m) const { return value(moments(m)); }

  std::vector<double> outer_gradient(std::span<const double> moments) const;

  /// dF/dm(m, x) given the outer gradient at the moments of m.
  double derivative(std::span<const double> outer_grad, double x) const;
  /// D_x dF/dm(m, x).
  double derivative_dx(std::span<const double> outer_grad, double x) const;

  /// dF/dm(m, .) tabulated on the nodes of m's grid.
  std::vector<double> derivative_field(const GridDensity& m) const;

 private:
  std::vector<TestFunction> tests_;
  Outer outer_;
  OuterGradient gradient_;
};

/// Running cost L(x, a) and its convex conjugate H(x, p) = sup_a { -a p - L(x, a) }.
///
/// The base class evaluates H by golden-section search on the concave map
/// a -> -a p - L(x, a); subclasses may override with closed forms.
class ControlCost {
 public:
  static constexpr double kSearchTolerance = 1e-10;

  explicit ControlCost(double control_bound = 1e3) : control_bound_(control_bound) {}
  virtual ~ControlCost() = default;

  virtual double lagrangian(double x, double a) const = 0;

  virtual double hamiltonian(double x, double p) const;
  /// Maximizer a*(x, p) = -D_p H(x, p).
  virtual double feedback(double x, double p) const;
  /// sup over |a| <= R.
  virtual double truncated_hamiltonian(double x, double p, double R) const;
  virtual double truncated_feedback(double x, double p, double R) const;

  double control_bound() const { return control_bound_; }

 protected:
  double argmax(double x, double p, double lo, double hi) const;

 private:
  double control_bound_;
};

/// L(x, a) = a^2 / 2, so H(x, p) = p^2 / 2.
class QuadraticControlCost final : public ControlCost {
 public:
  double lagrangian(double, double a) const override { return 0.5 * a * a; }
  double hamiltonian(double, double p) const override { return 0.5 * p * p; }
  double feedback(double, double p) const override { return -p; }
  double truncated_hamiltonian(double x, double p, double R) const override;
  double truncated_feedback(double x, double p, double R) const override;
};

/// Arbitrary convex Lagrangian given as a callable; H evaluated numerically.
class NumericControlCost final : public ControlCost {
 public:
  NumericControlCost(std::function<double(double, double)> lagrangian, double control_bound)
      : ControlCost(control_bound), lagrangian_(std::move(lagrangian)) {}

  double lagrangian(double x, double a) const override { return lagrangian_(x, a); }

 private:
  std::function<double(double, double)> lagrangian_;
};

struct CostEvaluation {
  double F = 0.0;
  double G = 0.0;
  std::vector<double> dF;
  std::vector<double> dG;
};

/// Control-problem data: Lagrangian, running and terminal cost functionals,
/// their Lipschitz constants with respect to the metric d, and the horizon.
class ModelSpec {
 public:
  ModelSpec(std::string name, std::shared_ptr<const ControlCost> control, MomentFunctional running,
            MomentFunctional terminal, double lip_F, double lip_G, double horizon);

  const std::string& name() const { return name_; }
  const ControlCost& control() const { return *control_; }
  const MomentFunctional& running() const { return running_; }
  const MomentFunctional& terminal() const { return terminal_; }
  double lip_F() const { return lip_F_; }
  double lip_G() const { return lip_G_; }
  double horizon() const { return horizon_; }

  double lagrangian(double x, double a) const;
  double hamiltonian(double x, double p) const;
  double truncated_hamiltonian(double x, double p, double R) const;
  double optimal_feedback(double x, double p) const;
  double truncated_feedback(double x, double p, double R) const;

  /// Throws InvariantViolation when the mass of m exceeds one.
  CostEvaluation eval_cost_functionals(const GridDensity& m) const;

  double F_zero() const;
  double G_zero() const;

 private:
  std::string name_;
  std::shared_ptr<const ControlCost> control_;
  MomentFunctional running_;
  MomentFunctional terminal_;
  double lip_F_;
  double lip_G_;
  double horizon_;
};

struct QuadraticModelParams {
  double c_F = 0.5;
  double c_G = 0.5;
  double lin_F = 1.0;
  double lin_G = 1.0;
  double offset_F = 0.0;
  double offset_G = 0.0;
  double T = 0.5;
};

/// L = a^2/2, F(m) = offset_F + lin_F <f,m> + c_F <w,m>^2 and likewise for G,
/// with f = g = w = sin(pi x).
ModelSpec make_quadratic_model(const QuadraticModelParams& params = {});

/// F = G = 0 with the quadratic Lagrangian.
ModelSpec make_zero_model(double T);

// Numerical checks of the standing assumptions.

/// max over x in xs, a, b in as of L(x, (a+b)/2) - (L(x,a) + L(x,b))/2; <= 0 for convex L.
double convexity_violation(const ModelSpec& model, std::span<const double> xs,
                           std::span<const double> as);

/// max |dF/dm(m, x)|, |dG/dm(m, x)| at x in {0, 1} over the given measures.
double boundary_derivative_max(const ModelSpec& model, std::span<const GridDensity> measures);

/// max over pairs of |F(m) - F(n)| - lip_F d(m, n) (and the same for G).
double lipschitz_excess(const ModelSpec& model, std::span<const GridDensity> ms,
                        std::span<const GridDensity> ns);

}  // namespace amfc
