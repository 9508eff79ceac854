#include "amfc/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "amfc/error.hpp"

namespace amfc {

namespace {
constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
}

double halton(std::uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  const auto b = static_cast<std::uint64_t>(base);
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % b);
    index /= b;
  }
  return r;
}

std::vector<double> halton_point(std::uint64_t index, int dim) {
  if (dim < 1 || dim > static_cast<int>(kPrimes.size())) throw DomainError("halton_point: dimension out of range");
  std::vector<double> p(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) p[static_cast<std::size_t>(j)] = halton(index, kPrimes[static_cast<std::size_t>(j)]);
  return p;
}

GridDensity random_density(const SpaceGrid& sg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double c1 = u(rng) - 0.5, c2 = u(rng) - 0.5, c3 = u(rng) - 0.5;
  const double shift = 0.3 * (u(rng) - 0.5);
  std::vector<double> v(static_cast<std::size_t>(sg.size()), 0.0);
  const double pi = std::numbers::pi;
  for (int i = 1; i <= sg.nx(); ++i) {
    const double x = sg.node(i);
    const double profile = std::sin(pi * x) * (1.0 + shift * std::cos(pi * x) + 0.5 * c1 * std::sin(2 * pi * x) +
                                                0.5 * c2 * std::sin(3 * pi * x) + 0.5 * c3 * std::cos(4 * pi * x));
    v[static_cast<std::size_t>(i)] = std::max(0.0, profile);
  }
  const double mass = trapezoid_mass(v, sg.dx());
  const double target = 0.1 + 0.9 * u(rng);
  for (double& x : v) x *= target / mass;
  return GridDensity(sg, std::move(v));
}

}  // namespace amfc
