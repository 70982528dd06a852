#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <utility>

namespace szoqq {

using Vec = Eigen::VectorXd;

// Base class of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (bad sizes, non-positive
// constants, malformed config, ...).
struct ContractViolation : Error {
  using Error::Error;
};

// A constraint oracle returned a non-finite value.
struct OracleError : Error {
  OracleError(int constraint, const std::string& what)
      : Error(what), constraint(constraint) {}
  int constraint;
};

// A point that must be strictly feasible is not; carries the offending
// constraint index (1-based) and its queried value.
struct InfeasibleAnchor : Error {
  InfeasibleAnchor(int constraint, double value, const std::string& what)
      : Error(what), constraint(constraint), value(value) {}
  int constraint;
  double value;
};

// The subproblem solver failed to converge or hit a numerical breakdown.
// best_iterate holds the last feasible point reached (may be empty).
struct SolveFailure : Error {
  explicit SolveFailure(const std::string& what, Vec best = {})
      : Error(what), best_iterate(std::move(best)) {}
  Vec best_iterate;
};

// A benchmark instance cannot be constructed (e.g. no strictly feasible
// starting point exists for the requested parameters).
struct BenchmarkUnavailable : Error {
  using Error::Error;
};

}  // namespace szoqq
