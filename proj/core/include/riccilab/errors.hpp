#pragma once

#include <stdexcept>
#include <string>

namespace riccilab {

// Error taxonomy. The CLI maps these onto exit codes: configuration
// problems exit 3, numerical non-convergence exits 2, check failures
// exit 1 (no exception; reported through the suite verdict).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Time or point outside the flow domain.
struct DomainError : Error {
  using Error::Error;
};

// Bad run configuration: unparseable config, unknown check id, truncation
// radius too small for a requested ball, grid too coarse for the seed.
struct ConfigError : Error {
  using Error::Error;
};

// Series or lattice truncation cannot reach the requested tolerance.
struct TruncationError : Error {
  TruncationError(const std::string& msg, int suggested_cutoff)
      : Error(msg), suggested_cutoff(suggested_cutoff) {}
  int suggested_cutoff = -1;
};

// Not enough neighbors for a finite-difference stencil.
struct StencilError : Error {
  using Error::Error;
};

// Solver failed: persistent positivity loss, step-size underflow, or mass
// drift above the configured budget.
struct ConvergenceError : Error {
  using Error::Error;
};

// Requested slice or record does not exist.
struct LookupError : Error {
  using Error::Error;
};

// Samples violate a property that is a theorem (e.g. entropy monotonicity);
// signals a quadrature/discretization failure rather than new mathematics.
struct DataQualityError : Error {
  using Error::Error;
};

}  // namespace riccilab
