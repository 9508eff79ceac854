#include "amfc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "amfc/error.hpp"
#include "amfc/metric.hpp"

namespace amfc {

TestFunction TestFunction::sine() {
  return {[](double x) { return std::sin(std::numbers::pi * x); },
          [](double x) { return std::numbers::pi * std::cos(std::numbers::pi * x); }};
}

TestFunction TestFunction::zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

MomentFunctional::MomentFunctional(std::vector<TestFunction> tests, Outer outer,
                                   OuterGradient gradient)
    : tests_(std::move(tests)), outer_(std::move(outer)), gradient_(std::move(gradient)) {}

MomentFunctional MomentFunctional::linear_quadratic(double offset, double lin, TestFunction f,
                                                    double quad, TestFunction w) {
  auto outer = [=](std::span<const double> y) { return offset + lin * y[0] + quad * y[1] * y[1]; };
  auto grad = [=](std::span<const double> y, std::span<double> g) {
    g[0] = lin;
    g[1] = 2.0 * quad * y[1];
  };
  return MomentFunctional({std::move(f), std::move(w)}, outer, grad);
}

std::vector<double> MomentFunctional::moments(const GridDensity& m) const {
  std::vector<double> y(tests_.size());
  for (std::size_t j = 0; j < tests_.size(); ++j) y[j] = m.integrate(tests_[j].value);
  return y;
}

std::vector<double> MomentFunctional::moments(const EmpiricalConfig& m) const {
  std::vector<double> y(tests_.size());
  for (std::size_t j = 0; j < tests_.size(); ++j) y[j] = m.integrate(tests_[j].value);
  return y;
}

std::vector<double> MomentFunctional::outer_gradient(std::span<const double> moments) const {
  std::vector<double> g(tests_.size());
  gradient_(moments, g);
  return g;
}

double MomentFunctional::derivative(std::span<const double> outer_grad, double x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < tests_.size(); ++j) s += outer_grad[j] * tests_[j].value(x);
  return s;
}

double MomentFunctional::derivative_dx(std::span<const double> outer_grad, double x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < tests_.size(); ++j) s += outer_grad[j] * tests_[j].derivative(x);
  return s;
}

std::vector<double> MomentFunctional::derivative_field(const GridDensity& m) const {
  const auto g = outer_gradient(moments(m));
  const SpaceGrid& grid = m.grid();
  std::vector<double> field(static_cast<std::size_t>(grid.size()));
  for (int i = 0; i < grid.size(); ++i)
    field[static_cast<std::size_t>(i)] = derivative(g, grid.node(i));
  return field;
}

// ---------------------------------------------------------------------------

double ControlCost::argmax(double x, double p, double lo, double hi) const {
  // Golden-section search; the objective is concave because L is convex in a.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto obj = [&](double a) { return -a * p - lagrangian(x, a); };
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = obj(c), fd = obj(d);
  while (b - a > kSearchTolerance * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = obj(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = obj(d);
    }
  }
  double best = 0.5 * (a + b);
  // The maximizer may sit on the constraint boundary.
  for (double cand : {lo, hi}) {
    if (obj(cand) > obj(best)) best = cand;
  }
  return best;
}

double ControlCost::feedback(double x, double p) const {
  return argmax(x, p, -control_bound_, control_bound_);
}

double ControlCost::hamiltonian(double x, double p) const {
  const double a = feedback(x, p);
  return -a * p - lagrangian(x, a);
}

double ControlCost::truncated_feedback(double x, double p, double R) const {
  return argmax(x, p, -R, R);
}

double ControlCost::truncated_hamiltonian(double x, double p, double R) const {
  const double a = truncated_feedback(x, p, R);
  return -a * p - lagrangian(x, a);
}

double QuadraticControlCost::truncated_hamiltonian(double, double p, double R) const {
  const double ap = std::abs(p);
  return ap <= R ? 0.5 * p * p : R * ap - 0.5 * R * R;
}

double QuadraticControlCost::truncated_feedback(double, double p, double R) const {
  return -std::clamp(p, -R, R);
}

// ---------------------------------------------------------------------------

ModelSpec::ModelSpec(std::string name, std::shared_ptr<const ControlCost> control,
                     MomentFunctional running, MomentFunctional terminal, double lip_F,
                     double lip_G, double horizon)
    : name_(std::move(name)),
      control_(std::move(control)),
      running_(std::move(running)),
      terminal_(std::move(terminal)),
      lip_F_(lip_F),
      lip_G_(lip_G),
      horizon_(horizon) {
  if (!control_) throw DomainError("ModelSpec: missing control cost");
  if (!(horizon_ > 0.0)) throw DomainError("ModelSpec: horizon must be positive");
}

namespace {
void require_finite(double x, double p) {
  if (!std::isfinite(p) || !std::isfinite(x)) throw DomainError("non-finite momentum or position");
  if (x < 0.0 || x > 1.0) throw DomainError("position outside the closed domain");
}
}  // namespace

double ModelSpec::lagrangian(double x, double a) const { return control_->lagrangian(x, a); }

double ModelSpec::hamiltonian(double x, double p) const {
  require_finite(x, p);
  return control_->hamiltonian(x, p);
}

double ModelSpec::truncated_hamiltonian(double x, double p, double R) const {
  require_finite(x, p);
  if (!(R > 0.0)) throw DomainError("truncated_hamiltonian: R must be positive");
  return control_->truncated_hamiltonian(x, p, R);
}

double ModelSpec::optimal_feedback(double x, double p) const {
  require_finite(x, p);
  return control_->feedback(x, p);
}

double ModelSpec::truncated_feedback(double x, double p, double R) const {
  require_finite(x, p);
  if (!(R > 0.0)) throw DomainError("truncated_feedback: R must be positive");
  return control_->truncated_feedback(x, p, R);
}

CostEvaluation ModelSpec::eval_cost_functionals(const GridDensity& m) const {
  if (m.mass() > 1.0 + GridDensity::kMassTolerance)
    throw InvariantViolation("eval_cost_functionals: mass exceeds one");
  CostEvaluation out;
  out.F = running_.value(m);
  out.G = terminal_.value(m);
  out.dF = running_.derivative_field(m);
  out.dG = terminal_.derivative_field(m);
  return out;
}

double ModelSpec::F_zero() const {
  const std::vector<double> y(running_.moment_count(), 0.0);
  return running_.value(y);
}

double ModelSpec::G_zero() const {
  const std::vector<double> y(terminal_.moment_count(), 0.0);
  return terminal_.value(y);
}

ModelSpec make_quadratic_model(const QuadraticModelParams& p) {
  auto running = MomentFunctional::linear_quadratic(p.offset_F, p.lin_F, TestFunction::sine(),
                                                    p.c_F, TestFunction::sine());
  auto terminal = MomentFunctional::linear_quadratic(p.offset_G, p.lin_G, TestFunction::sine(),
                                                     p.c_G, TestFunction::sine());
  // |<sin(pi.), m - n>| <= pi d(m, n) and |<w,m>| + |<w,n>| <= 2.
  const double pi = std::numbers::pi;
  const double lip_F = pi * (std::abs(p.lin_F) + 2.0 * std::abs(p.c_F));
  const double lip_G = pi * (std::abs(p.lin_G) + 2.0 * std::abs(p.c_G));
  return ModelSpec("quadratic", std::make_shared<QuadraticControlCost>(), std::move(running),
                   std::move(terminal), lip_F, lip_G, p.T);
}

ModelSpec make_zero_model(double T) {
  QuadraticModelParams p;
  p.c_F = p.c_G = p.lin_F = p.lin_G = 0.0;
  p.T = T;
  ModelSpec base = make_quadratic_model(p);
  return ModelSpec("zero", std::make_shared<QuadraticControlCost>(), base.running(),
                   base.terminal(), 0.0, 0.0, T);
}

// ---------------------------------------------------------------------------

double convexity_violation(const ModelSpec& model, std::span<const double> xs,
                           std::span<const double> as) {
  double worst = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    for (double a : as) {
      for (double b : as) {
        const double mid = model.lagrangian(x, 0.5 * (a + b));
        const double chord = 0.5 * (model.lagrangian(x, a) + model.lagrangian(x, b));
        worst = std::max(worst, mid - chord);
      }
    }
  }
  return worst;
}

double boundary_derivative_max(const ModelSpec& model, std::span<const GridDensity> measures) {
  double worst = 0.0;
  for (const auto& m : measures) {
    for (const MomentFunctional* fn : {&model.running(), &model.terminal()}) {
      const auto g = fn->outer_gradient(fn->moments(m));
      worst = std::max({worst, std::abs(fn->derivative(g, 0.0)), std::abs(fn->derivative(g, 1.0))});
    }
  }
  return worst;
}

double lipschitz_excess(const ModelSpec& model, std::span<const GridDensity> ms,
                        std::span<const GridDensity> ns) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < std::min(ms.size(), ns.size()); ++k) {
    const double d = metric_d_fast(ms[k], ns[k]);
    const double dF = std::abs(model.running().value(ms[k]) - model.running().value(ns[k]));
    const double dG = std::abs(model.terminal().value(ms[k]) - model.terminal().value(ns[k]));
    worst = std::max({worst, dF - model.lip_F() * d, dG - model.lip_G() * d});
  }
  return worst;
}

}  // namespace amfc
