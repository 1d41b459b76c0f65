#pragma once

#include <stdexcept>
#include <string>

namespace survborrow {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// CSV header does not match the expected schema.
struct SchemaError : Error {
  using Error::Error;
};

// A field failed to parse as a number.
struct ParseError : Error {
  using Error::Error;
};

// A record or dataset violates a domain invariant.
struct ValidityError : Error {
  using Error::Error;
};

// Bad configuration value (unknown setting id, infeasible sizes, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Caller broke an operation contract (wrong subject kind, length mismatch, ...).
struct ContractError : Error {
  using Error::Error;
};

// Monte Carlo intercept calibration could not bracket the target.
struct CalibrationError : Error {
  using Error::Error;
};

// Monotone likelihood: a coefficient diverged during fitting.
struct SeparationError : Error {
  using Error::Error;
};

// Singular Hessian / weighted design.
struct RankError : Error {
  using Error::Error;
};

// A censoring stratum has no censored subjects; caller should substitute
// the constant model S^C = 1.
struct NoCensoringError : Error {
  using Error::Error;
};

// A nuisance fit failed; message names which nuisance.
struct FitError : Error {
  using Error::Error;
};

// Fold assignment cannot satisfy the fitter preconditions.
struct FoldError : Error {
  using Error::Error;
};

// A bootstrap resample kept violating fit preconditions after retries.
struct ResampleError : Error {
  using Error::Error;
};

}  // namespace survborrow
