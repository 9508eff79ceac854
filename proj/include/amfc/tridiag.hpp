#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace amfc {

/// Thomas algorithm for a general tridiagonal system. `sub[i]` multiplies
/// x[i-1], `sup[i]` multiplies x[i+1]; `rhs` is overwritten with the solution.
/// Throws SolverError on a zero pivot.
void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> sup, std::span<double> rhs);

/// Pre-factored solver for (1 + 2 lambda) x_i - lambda (x_{i-1} + x_{i+1}) = r_i,
/// i = 1..n, with prescribed end values x_0 and x_{n+1}: one implicit heat step
/// on a line of a tensor grid. Lines are addressed by a base pointer and a stride.
class ImplicitLaplacian {
 public:
  ImplicitLaplacian(int n, double lambda);

  int size() const { return n_; }
  double lambda() const { return lambda_; }

  /// In-place solve on data[stride], data[2 stride], ..., data[n stride];
  /// data[0] and data[(n+1) stride] hold the Dirichlet values and are left untouched.
  void solve_line(double* data, std::ptrdiff_t stride) const;

 private:
  int n_;
  double lambda_;
  std::vector<double> cprime_;  // modified super-diagonal
  std::vector<double> inv_;     // reciprocal pivots
};

}  // namespace amfc
