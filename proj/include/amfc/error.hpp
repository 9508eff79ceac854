#pragma once

#include <stdexcept>
#include <string>

namespace amfc {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A data-structure invariant (mass, sign, boundary values) does not hold.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical solver failed (non-convergence, positivity loss, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Time step too large for the explicit part of a scheme.
class CflError : public SolverError {
 public:
  CflError(const std::string& what, int suggested_nt)
      : SolverError(what + " (suggested nt >= " + std::to_string(suggested_nt) + ")"),
        suggested_nt_(suggested_nt) {}

  int suggested_nt() const { return suggested_nt_; }

 private:
  int suggested_nt_;
};

/// Tensor storage would exceed the configured memory budget.
class MemoryGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amfc
