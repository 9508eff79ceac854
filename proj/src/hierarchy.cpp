#include "amfc/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "amfc/error.hpp"
#include "amfc/tridiag.hpp"

namespace amfc {

HierarchySolution::HierarchySolution(int N, ModelSpec model, SpaceGrid sg, TimeGrid tg,
                                     HierarchyOptions opts)
    : N_(N), model_(std::move(model)), sg_(sg), tg_(tg), opts_(opts) {
  if (N < 0) throw DomainError("hierarchy: N must be nonnegative");
  if (opts_.store_stride < 1 || tg_.nt() % opts_.store_stride != 0)
    throw DomainError("hierarchy: store_stride must divide nt");
  const auto n = static_cast<std::size_t>(sg_.size());
  std::size_t total = 0;
  sizes_.push_back(1);
  for (int K = 1; K <= N; ++K) sizes_.push_back(sizes_.back() * n);
  for (std::size_t s : sizes_) total += s * static_cast<std::size_t>(layers() + 2);
  if (total > opts_.memory_limit) {
    std::ostringstream os;
    os << "hierarchy: " << total << " doubles needed, limit " << opts_.memory_limit
       << " (increase store_stride or reduce nx/N)";
    throw MemoryGuardError(os.str());
  }
  for (std::size_t s : sizes_) data_.emplace_back(s * static_cast<std::size_t>(layers()), 0.0);
}

std::span<const double> HierarchySolution::layer(int K, int j) const {
  const std::size_t s = sizes_[static_cast<std::size_t>(K)];
  return std::span<const double>(data_[static_cast<std::size_t>(K)]).subspan(static_cast<std::size_t>(j) * s, s);
}

std::span<double> HierarchySolution::layer(int K, int j) {
  const std::size_t s = sizes_[static_cast<std::size_t>(K)];
  return std::span<double>(data_[static_cast<std::size_t>(K)]).subspan(static_cast<std::size_t>(j) * s, s);
}

std::size_t HierarchySolution::flat_index(int K, std::span<const int> idx) const {
  std::size_t f = 0;
  for (int j = 0; j < K; ++j) f = f * static_cast<std::size_t>(sg_.size()) + static_cast<std::size_t>(idx[static_cast<std::size_t>(j)]);
  return f;
}

void HierarchySolution::unflatten(int K, std::size_t flat, std::span<int> idx) const {
  const auto n = static_cast<std::size_t>(sg_.size());
  for (int j = K - 1; j >= 0; --j) {
    idx[static_cast<std::size_t>(j)] = static_cast<int>(flat % n);
    flat /= n;
  }
}

double HierarchySolution::node_value(int K, int j, std::span<const int> idx) const {
  return layer(K, j)[flat_index(K, idx)];
}

namespace {

struct LevelGeometry {
  int K;
  int n;
  std::vector<std::size_t> stride;  // stride of coordinate j
};

LevelGeometry geometry(int K, int n) {
  LevelGeometry g{K, n, std::vector<std::size_t>(static_cast<std::size_t>(K))};
  std::size_t s = 1;
  for (int j = K - 1; j >= 0; --j) {
    g.stride[static_cast<std::size_t>(j)] = s;
    s *= static_cast<std::size_t>(n);
  }
  return g;
}

// Advances an odometer over {0..n-1}^K; returns false after the last tuple.
bool next_tuple(std::vector<int>& idx, int n) {
  for (std::size_t j = idx.size(); j-- > 0;) {
    if (++idx[j] < n) return true;
    idx[j] = 0;
  }
  return false;
}

int first_boundary(const std::vector<int>& idx, int nx) {
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (idx[j] == 0 || idx[j] == nx + 1) return static_cast<int>(j);
  return -1;
}

std::size_t reduced_flat(const std::vector<int>& idx, int drop, int n) {
  std::size_t f = 0;
  for (std::size_t j = 0; j < idx.size(); ++j)
    if (static_cast<int>(j) != drop) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(idx[j]);
  return f;
}

// Cost functional of the empirical measure (1/N) sum delta_{x_{i_j}} over alive coordinates.
std::vector<double> cost_tensor(const MomentFunctional& fn, int N, int K, const SpaceGrid& sg) {
  const int n = sg.size();
  std::size_t size = 1;
  for (int j = 0; j < K; ++j) size *= static_cast<std::size_t>(n);
  std::vector<double> out(size);
  std::vector<int> idx(static_cast<std::size_t>(K), 0);
  std::vector<double> pts(static_cast<std::size_t>(K));
  std::size_t f = 0;
  do {
    for (int j = 0; j < K; ++j) pts[static_cast<std::size_t>(j)] = sg.node(idx[static_cast<std::size_t>(j)]);
    out[f++] = fn.value(EmpiricalConfig(N, pts));
  } while (K > 0 && next_tuple(idx, n));
  return out;
}

class LevelStepper {
 public:
  LevelStepper(int N, int K, const ModelSpec& model, const SpaceGrid& sg, double dt, double R)
      : N_(N), K_(K), model_(model), sg_(sg), dt_(dt), R_(R), geo_(geometry(K, sg.size())),
        heat_(sg.nx(), dt / (sg.dx() * sg.dx())), F_(cost_tensor(model.running(), N, K, sg)) {
    // Interior flat indices and their coordinates, in ascending flat order.
    std::vector<int> idx(static_cast<std::size_t>(K), 0);
    std::size_t f = 0;
    do {
      if (first_boundary(idx, sg.nx()) < 0) {
        interior_.push_back(f);
        coords_.insert(coords_.end(), idx.begin(), idx.end());
      } else {
        boundary_.push_back(f);
        const int drop = first_boundary(idx, sg.nx());
        reduced_.push_back(reduced_flat(idx, drop, sg.size()));
      }
      ++f;
    } while (next_tuple(idx, sg.size()));
    build_orbits();
    build_lines();
    symmetrize(F_);
  }

  std::vector<double> terminal() const {
    std::vector<double> g = cost_tensor(model_.terminal(), N_, K_, sg_);
    symmetrize(g);
    return g;
  }

  void copy_boundary(std::span<double> level, std::span<const double> lower) const {
    for (std::size_t b = 0; b < boundary_.size(); ++b) level[boundary_[b]] = lower[reduced_[b]];
  }

  // next holds boundary values at t_n on entry; cur is the level at t_{n+1}.
  void step(std::span<const double> cur, std::span<double> next) const {
    const double dx = sg_.dx();
    const double invN = 1.0 / N_;
    for (std::size_t q = 0; q < interior_.size(); ++q) {
      const std::size_t f = interior_[q];
      const int* idx = &coords_[q * static_cast<std::size_t>(K_)];
      const double v0 = cur[f];
      double hsum = 0.0;
      for (int j = 0; j < K_; ++j) {
        const std::size_t s = geo_.stride[static_cast<std::size_t>(j)];
        const double x = sg_.node(idx[j]);
        const double pm = (v0 - cur[f - s]) / dx;
        const double pp = (cur[f + s] - v0) / dx;
        const double h = invN * model_.truncated_hamiltonian(x, 0.5 * N_ * (pm + pp), R_);
        const double theta = std::max(std::abs(model_.truncated_feedback(x, N_ * pm, R_)),
                                      std::abs(model_.truncated_feedback(x, N_ * pp, R_)));
        hsum += h - 0.5 * theta * (pp - pm);
      }
      next[f] = v0 + dt_ * (F_[f] - hsum);
    }
    for (int j = 0; j < K_; ++j) {
      const auto s = static_cast<std::ptrdiff_t>(geo_.stride[static_cast<std::size_t>(j)]);
      for (std::size_t base : lines_[static_cast<std::size_t>(j)]) heat_.solve_line(next.data() + base, s);
    }
    symmetrize(next);
  }

  void symmetrize(std::span<double> v) const {
    if (K_ < 2) return;
    for (std::size_t o = 0; o + 1 < orbit_start_.size(); ++o) {
      const std::size_t a = orbit_start_[o], b = orbit_start_[o + 1];
      double s = 0.0;
      for (std::size_t p = a; p < b; ++p) s += v[orbit_members_[p]];
      const double mean = s / static_cast<double>(b - a);
      for (std::size_t p = a; p < b; ++p) v[orbit_members_[p]] = mean;
    }
  }

 private:
  void build_orbits() {
    if (K_ < 2) return;
    std::vector<int> idx(static_cast<std::size_t>(K_), 1);
    const int nx = sg_.nx();
    for (;;) {
      orbit_start_.push_back(orbit_members_.size());
      std::vector<int> perm = idx;
      do {
        std::size_t f = 0;
        for (int c : perm) f = f * static_cast<std::size_t>(sg_.size()) + static_cast<std::size_t>(c);
        orbit_members_.push_back(f);
      } while (std::next_permutation(perm.begin(), perm.end()));
      // next nondecreasing tuple in [1, nx]^K
      int j = K_ - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == nx) --j;
      if (j < 0) break;
      const int v = idx[static_cast<std::size_t>(j)] + 1;
      for (int k = j; k < K_; ++k) idx[static_cast<std::size_t>(k)] = v;
    }
    orbit_start_.push_back(orbit_members_.size());
  }

  void build_lines() {
    lines_.resize(static_cast<std::size_t>(K_));
    for (int j = 0; j < K_; ++j) {
      const std::size_t s = geo_.stride[static_cast<std::size_t>(j)];
      for (std::size_t q = 0; q < interior_.size(); ++q)
        if (coords_[q * static_cast<std::size_t>(K_) + static_cast<std::size_t>(j)] == 1)
          lines_[static_cast<std::size_t>(j)].push_back(interior_[q] - s);
    }
  }

  int N_, K_;
  const ModelSpec& model_;
  const SpaceGrid& sg_;
  double dt_, R_;
  LevelGeometry geo_;
  ImplicitLaplacian heat_;
  std::vector<double> F_;
  std::vector<std::size_t> interior_;
  std::vector<int> coords_;
  std::vector<std::size_t> boundary_, reduced_;
  std::vector<std::size_t> orbit_start_, orbit_members_;
  std::vector<std::vector<std::size_t>> lines_;
};

}  // namespace

HierarchySolution solve_hierarchy(int N, const ModelSpec& model, const SpaceGrid& sg,
                                  const TimeGrid& tg, const HierarchyOptions& opts) {
  if (!(opts.R >= 1.0)) throw DomainError("solve_hierarchy: R must be >= 1");
  if (N > 0) {
    const double limit = sg.dx() / (2.0 * opts.R * N);
    if (tg.dt() > limit * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "solve_hierarchy: dt = " << tg.dt() << " exceeds dx/(2 R N) = " << limit;
      throw CflError(os.str(), static_cast<int>(std::ceil((tg.T() - tg.t0()) / limit)));
    }
  }
  HierarchySolution sol(N, model, sg, tg, opts);
  const double F0 = model.F_zero(), G0 = model.G_zero();

  std::vector<LevelStepper> steppers;
  steppers.reserve(static_cast<std::size_t>(N));
  for (int K = 1; K <= N; ++K) steppers.emplace_back(N, K, sol.model(), sol.space(), tg.dt(), opts.R);

  std::vector<std::vector<double>> cur(static_cast<std::size_t>(N + 1)), next(static_cast<std::size_t>(N + 1));
  cur[0] = {G0};
  next[0] = {0.0};
  for (int K = 1; K <= N; ++K) {
    auto& stepper = steppers[static_cast<std::size_t>(K - 1)];
    cur[static_cast<std::size_t>(K)] = stepper.terminal();
    stepper.copy_boundary(cur[static_cast<std::size_t>(K)], cur[static_cast<std::size_t>(K - 1)]);
    next[static_cast<std::size_t>(K)].assign(sol.level_size(K), 0.0);
  }
  auto archive = [&](int step, const std::vector<std::vector<double>>& v) {
    if (step % opts.store_stride != 0) return;
    const int j = step / opts.store_stride;
    for (int K = 0; K <= N; ++K) std::copy(v[static_cast<std::size_t>(K)].begin(), v[static_cast<std::size_t>(K)].end(), sol.layer(K, j).begin());
  };
  archive(tg.nt(), cur);

  for (int k = tg.nt() - 1; k >= 0; --k) {
    next[0][0] = G0 + (tg.T() - tg.time(k)) * F0;
    for (int K = 1; K <= N; ++K) {
      const auto& stepper = steppers[static_cast<std::size_t>(K - 1)];
      stepper.copy_boundary(next[static_cast<std::size_t>(K)], next[static_cast<std::size_t>(K - 1)]);
      stepper.step(cur[static_cast<std::size_t>(K)], next[static_cast<std::size_t>(K)]);
    }
    for (int K = 0; K <= N; ++K) {
      for (double v : next[static_cast<std::size_t>(K)])
        if (!std::isfinite(v)) throw SolverError("solve_hierarchy: non-finite value");
    }
    cur.swap(next);
    archive(k, cur);
  }
  return sol;
}

// ---------------------------------------------------------------------------

namespace {

void check_query(const HierarchySolution& sol, int K, double t, std::span<const double> x) {
  if (K < 0 || K > sol.N()) throw DomainError("hierarchy query: level out of range");
  if (x.size() != static_cast<std::size_t>(K)) throw DomainError("hierarchy query: wrong point dimension");
  const TimeGrid& tg = sol.time();
  if (!(t >= tg.t0() - 1e-12 && t <= tg.T() + 1e-12)) throw DomainError("hierarchy query: time out of range");
  for (double v : x)
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("hierarchy query: point outside the closed domain");
}

struct TimeWeight {
  int j0;
  double w;
};

TimeWeight time_weight(const HierarchySolution& sol, double t) {
  const TimeGrid& tg = sol.time();
  const double h = tg.dt() * sol.stride();
  const double s = (t - tg.t0()) / h;
  int j0 = std::clamp(static_cast<int>(std::floor(s)), 0, sol.layers() - 2);
  double w = std::clamp(s - j0, 0.0, 1.0);
  if (t >= tg.T()) {
    j0 = sol.layers() - 2;
    w = 1.0;
  }
  return {j0, w};
}

// Generic multilinear interpolation of a nodal quantity q(K, layer, idx).
template <class NodeFn>
double interpolate(const HierarchySolution& sol, int K, double t, std::span<const double> x, NodeFn q) {
  const SpaceGrid& sg = sol.space();
  const TimeWeight tw = time_weight(sol, t);
  std::vector<int> cell(static_cast<std::size_t>(K));
  std::vector<double> w(static_cast<std::size_t>(K));
  for (int j = 0; j < K; ++j) {
    const double s = x[static_cast<std::size_t>(j)] / sg.dx();
    const int c = std::clamp(static_cast<int>(std::floor(s)), 0, sg.nx());
    cell[static_cast<std::size_t>(j)] = c;
    w[static_cast<std::size_t>(j)] = std::clamp(s - c, 0.0, 1.0);
  }
  std::vector<int> idx(static_cast<std::size_t>(K));
  double result = 0.0;
  for (int side = 0; side < 2; ++side) {
    const double tw_s = side == 0 ? 1.0 - tw.w : tw.w;
    if (tw_s == 0.0) continue;
    const int layer = tw.j0 + side;
    double acc = 0.0;
    for (unsigned corner = 0; corner < (1u << K); ++corner) {
      double weight = 1.0;
      for (int j = 0; j < K; ++j) {
        const bool up = (corner >> j) & 1u;
        idx[static_cast<std::size_t>(j)] = cell[static_cast<std::size_t>(j)] + (up ? 1 : 0);
        weight *= up ? w[static_cast<std::size_t>(j)] : 1.0 - w[static_cast<std::size_t>(j)];
      }
      if (weight != 0.0) acc += weight * q(layer, idx);
    }
    result += tw_s * acc;
  }
  return result;
}

double nodal_gradient(const HierarchySolution& sol, int K, int layer, std::vector<int> idx, int i) {
  const SpaceGrid& sg = sol.space();
  const int c = idx[static_cast<std::size_t>(i)];
  const int lo = std::max(c - 1, 0), hi = std::min(c + 1, sg.nx() + 1);
  idx[static_cast<std::size_t>(i)] = hi;
  const double vh = sol.node_value(K, layer, idx);
  idx[static_cast<std::size_t>(i)] = lo;
  const double vl = sol.node_value(K, layer, idx);
  return (vh - vl) / ((hi - lo) * sg.dx());
}

}  // namespace

double eval_value(const HierarchySolution& sol, int K, double t, std::span<const double> x) {
  check_query(sol, K, t, x);
  std::vector<double> alive;
  for (double v : x)
    if (v > 0.0 && v < 1.0) alive.push_back(v);
  const int Ka = static_cast<int>(alive.size());
  return interpolate(sol, Ka, t, alive,
                     [&](int layer, const std::vector<int>& idx) { return sol.node_value(Ka, layer, idx); });
}

double eval_gradient(const HierarchySolution& sol, int K, double t, std::span<const double> x, int i) {
  check_query(sol, K, t, x);
  if (i < 0 || i >= K) throw DomainError("eval_gradient: coordinate out of range");
  for (double v : x)
    if (!(v > 0.0 && v < 1.0)) throw DomainError("eval_gradient: point must be interior");
  return interpolate(sol, K, t, x, [&](int layer, const std::vector<int>& idx) {
    return nodal_gradient(sol, K, layer, idx, i);
  });
}

double check_crude_bound(const HierarchySolution& sol) {
  const int n = sol.space().size();
  double worst = 0.0;
  for (int K = 1; K <= sol.N(); ++K) {
    for (int j = 0; j < sol.layers(); ++j) {
      const auto hi = sol.layer(K, j), lo = sol.layer(K - 1, j);
      std::vector<int> idx(static_cast<std::size_t>(K), 0);
      std::size_t f = 0;
      do {
        for (int i = 0; i < K; ++i) worst = std::max(worst, std::abs(hi[f] - lo[reduced_flat(idx, i, n)]));
        ++f;
      } while (next_tuple(idx, n));
    }
  }
  return sol.N() * worst;
}

double gradient_scaling_at_layer(const HierarchySolution& sol, int layer) {
  const SpaceGrid& sg = sol.space();
  const int n = sg.size();
  double worst = 0.0;
  for (int K = 1; K <= sol.N(); ++K) {
    const auto v = sol.layer(K, layer);
    const LevelGeometry g = geometry(K, n);
    std::vector<int> idx(static_cast<std::size_t>(K), 0);
    std::size_t f = 0;
    do {
      if (first_boundary(idx, sg.nx()) < 0) {
        for (int i = 0; i < K; ++i) {
          const std::size_t s = g.stride[static_cast<std::size_t>(i)];
          worst = std::max(worst, std::abs(v[f + s] - v[f - s]) / (2.0 * sg.dx()));
        }
      }
      ++f;
    } while (next_tuple(idx, n));
  }
  return sol.N() * worst;
}

double check_gradient_scaling(const HierarchySolution& sol) {
  double worst = 0.0;
  for (int j = 0; j < sol.layers(); ++j) worst = std::max(worst, gradient_scaling_at_layer(sol, j));
  return worst;
}

double compatibility_defect(const HierarchySolution& sol) {
  const SpaceGrid& sg = sol.space();
  const int n = sg.size();
  double worst = 0.0;
  for (int K = 1; K <= sol.N(); ++K) {
    for (int j = 0; j < sol.layers(); ++j) {
      const auto hi = sol.layer(K, j), lo = sol.layer(K - 1, j);
      std::vector<int> idx(static_cast<std::size_t>(K), 0);
      std::size_t f = 0;
      do {
        for (int i = 0; i < K; ++i) {
          const int c = idx[static_cast<std::size_t>(i)];
          if (c == 0 || c == sg.nx() + 1) worst = std::max(worst, std::abs(hi[f] - lo[reduced_flat(idx, i, n)]));
        }
        ++f;
      } while (next_tuple(idx, n));
    }
  }
  return worst;
}

double level_zero_defect(const HierarchySolution& sol) {
  const ModelSpec& m = sol.model();
  double worst = 0.0;
  for (int j = 0; j < sol.layers(); ++j) {
    const double expected = m.G_zero() + (sol.time().T() - sol.layer_time(j)) * m.F_zero();
    worst = std::max(worst, std::abs(sol.layer(0, j)[0] - expected));
  }
  return worst;
}

double symmetry_defect(const HierarchySolution& sol) {
  const int n = sol.space().size();
  double worst = 0.0;
  for (int K = 2; K <= sol.N(); ++K) {
    for (int j = 0; j < sol.layers(); ++j) {
      const auto v = sol.layer(K, j);
      std::vector<int> idx(static_cast<std::size_t>(K), 0);
      std::size_t f = 0;
      do {
        for (int a = 0; a < K; ++a) {
          for (int b = a + 1; b < K; ++b) {
            std::vector<int> sw = idx;
            std::swap(sw[static_cast<std::size_t>(a)], sw[static_cast<std::size_t>(b)]);
            worst = std::max(worst, std::abs(v[f] - v[sol.flat_index(K, sw)]));
          }
        }
        ++f;
      } while (next_tuple(idx, n));
    }
  }
  return worst;
}

}  // namespace amfc
