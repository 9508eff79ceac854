#include "amfc/tridiag.hpp"

#include <cmath>

#include "amfc/error.hpp"

namespace amfc {

void solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                       std::span<const double> sup, std::span<double> rhs) {
  const std::size_t n = diag.size();
  if (sub.size() != n || sup.size() != n || rhs.size() != n)
    throw DomainError("solve_tridiagonal: size mismatch");
  if (n == 0) return;
  std::vector<double> c(n);
  double pivot = diag[0];
  if (pivot == 0.0) throw SolverError("solve_tridiagonal: zero pivot");
  c[0] = sup[0] / pivot;
  rhs[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("solve_tridiagonal: zero pivot");
    c[i] = sup[i] / pivot;
    rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

ImplicitLaplacian::ImplicitLaplacian(int n, double lambda)
    : n_(n), lambda_(lambda), cprime_(static_cast<std::size_t>(n)), inv_(static_cast<std::size_t>(n)) {
  if (n < 1) throw DomainError("ImplicitLaplacian: empty line");
  if (!(lambda >= 0.0)) throw DomainError("ImplicitLaplacian: negative lambda");
  const double d = 1.0 + 2.0 * lambda;
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double pivot = d + lambda * prev;  // d - (-lambda) * c'_{i-1}
    inv_[static_cast<std::size_t>(i)] = 1.0 / pivot;
    prev = -lambda / pivot;
    cprime_[static_cast<std::size_t>(i)] = prev;
  }
}

void ImplicitLaplacian::solve_line(double* data, std::ptrdiff_t stride) const {
  const double left = data[0];
  const double right = data[(n_ + 1) * stride];
  double prev = 0.0;
  for (int i = 0; i < n_; ++i) {
    double r = data[(i + 1) * stride];
    if (i == 0) r += lambda_ * left;
    if (i == n_ - 1) r += lambda_ * right;
    prev = (r + lambda_ * prev) * inv_[static_cast<std::size_t>(i)];
    data[(i + 1) * stride] = prev;
  }
  for (int i = n_ - 1; i-- > 0;)
    data[(i + 1) * stride] -= cprime_[static_cast<std::size_t>(i)] * data[(i + 2) * stride];
}

}  // namespace amfc
