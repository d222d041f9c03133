#pragma once

#include <stdexcept>
#include <string>

namespace vlsplit {

/// Bad input to a model or solver routine (non-positive frequency, empty RSU set, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A link whose rate is zero or negative where a positive rate is required.
class InfeasibleLink : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An allocation violates one of the problem constraints. `constraint()` names it.
class FeasibilityError : public std::runtime_error {
 public:
  FeasibilityError(std::string constraint, const std::string& detail)
      : std::runtime_error(constraint + ": " + detail), constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

/// A numerical solver failed outright (QP infeasible, KKT system singular after retries).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vlsplit
