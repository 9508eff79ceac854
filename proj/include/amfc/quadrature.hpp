#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace amfc {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const GaussLegendreRule& gauss_legendre(int order);

/// Composite Gauss-Legendre over [a, b], splitting at the given breakpoints
/// and into panels no wider than max_panel.
double integrate_composite(const std::function<double(double)>& f, double a, double b,
                           std::span<const double> breakpoints, double max_panel,
                           int order = 20);

}  // namespace amfc
