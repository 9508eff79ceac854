#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "amfc/grid.hpp"
#include "amfc/model.hpp"

namespace amfc {

struct HierarchyOptions {
  double R = 5.0;            // truncation radius of the Hamiltonian
  int store_stride = 1;      // keep every store_stride-th time layer (nt must be a multiple)
  std::size_t memory_limit = std::size_t{1} << 26;  // stored doubles across all levels
};

/// Value tensors V^{N,K}, K = 0..N, over (nodes incl. boundary)^K, for the
/// stored time layers. Level K at a layer is row-major in (i_1, ..., i_K).
class HierarchySolution {
 public:
  HierarchySolution(int N, ModelSpec model, SpaceGrid sg, TimeGrid tg, HierarchyOptions opts);

  int N() const { return N_; }
  const ModelSpec& model() const { return model_; }
  const SpaceGrid& space() const { return sg_; }
  const TimeGrid& time() const { return tg_; }
  double R() const { return opts_.R; }
  int stride() const { return opts_.store_stride; }

  /// Stored layers j = 0..layers()-1 sit at time step j * stride.
  int layers() const { return tg_.nt() / opts_.store_stride + 1; }
  double layer_time(int j) const { return tg_.time(j * opts_.store_stride); }
  /// Nodes per level-K layer: (nx + 2)^K.
  std::size_t level_size(int K) const { return sizes_[static_cast<std::size_t>(K)]; }

  std::span<const double> layer(int K, int j) const;
  std::span<double> layer(int K, int j);

  /// Value at a tensor node of a stored layer.
  double node_value(int K, int j, std::span<const int> idx) const;
  std::size_t flat_index(int K, std::span<const int> idx) const;
  void unflatten(int K, std::size_t flat, std::span<int> idx) const;

 private:
  int N_;
  ModelSpec model_;
  SpaceGrid sg_;
  TimeGrid tg_;
  HierarchyOptions opts_;
  std::vector<std::size_t> sizes_;
  std::vector<std::vector<double>> data_;
};

/// Backward time-marching solve of the hierarchy. Per step, levels are
/// updated in ascending K: boundary nodes copy level K-1 at the reduced node,
/// the Hamiltonian and running cost are explicit (local Lax-Friedrichs flux of
/// (1/N) H^R(x, N p)), diffusion is implicit by one tridiagonal sweep per
/// coordinate, and each level is then averaged over coordinate permutations.
///
/// Throws CflError if dt > dx / (2 R N), MemoryGuardError if the stored
/// tensors exceed opts.memory_limit doubles, DomainError for N < 0 or R < 1.
HierarchySolution solve_hierarchy(int N, const ModelSpec& model, const SpaceGrid& sg,
                                  const TimeGrid& tg, const HierarchyOptions& opts);

/// Multilinear interpolation in space, linear between stored layers in time.
/// Coordinates equal to 0 or 1 are removed and the query goes to level K-1.
double eval_value(const HierarchySolution& sol, int K, double t, std::span<const double> x);

/// D_{x^i} V^{N,K} at (t, x): nodal centered differences (one-sided on the
/// boundary) interpolated like eval_value. Requires x interior.
double eval_gradient(const HierarchySolution& sol, int K, double t, std::span<const double> x,
                     int i);

/// max over levels, stored layers, nodes and dropped coordinates of
/// N |V^{N,K}(x) - V^{N,K-1}(x^{-i})|.
double check_crude_bound(const HierarchySolution& sol);

/// N times the max over levels K >= 1, stored layers, interior nodes and
/// coordinates of the centered-difference |D_{x^i} V^{N,K}|.
double check_gradient_scaling(const HierarchySolution& sol);
/// The same restricted to one stored layer.
double gradient_scaling_at_layer(const HierarchySolution& sol, int j);

/// max |V^{N,K}(x) - V^{N,K-1}(x^{-i})| over nodes with x^i on the boundary (should be 0).
double compatibility_defect(const HierarchySolution& sol);

/// max over stored layers of |V^{N,0}(t) - G(0) - (T - t) F(0)|.
double level_zero_defect(const HierarchySolution& sol);

/// max over levels and layers of |V(x) - V(sigma x)| over all coordinate swaps.
double symmetry_defect(const HierarchySolution& sol);

}  // namespace amfc
