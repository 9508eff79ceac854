#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "amfc/grid.hpp"

namespace amfc {

/// Radical inverse of `index` in the given prime base (Halton coordinate).
double halton(std::uint64_t index, int base);

/// Point `index` of the Halton sequence in [0,1)^dim (bases 2, 3, 5, 7, ...), dim <= 16.
std::vector<double> halton_point(std::uint64_t index, int dim);

/// Smooth random sub-probability density: a perturbed sine profile, zero on the
/// boundary, total mass uniform in [0.1, 1].
GridDensity random_density(const SpaceGrid& sg, std::mt19937_64& rng);

}  // namespace amfc
