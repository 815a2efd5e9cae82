#pragma once

#include <stdexcept>
#include <string>

namespace tacsim {

/// Argument outside the domain of a pointwise formula (r outside (0,1), s <= 0, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Base of all recoverable solver failures; the driver reacts by shrinking the window.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NewtonDivergence : SolverError {
    using SolverError::SolverError;
};

/// rho left (0,1), or xi exceeded its ceiling.
struct RangeViolation : SolverError {
    using SolverError::SolverError;
};

/// Inner Picard loop on (rho, xi) did not settle within its iteration budget.
struct NoContraction : SolverError {
    using SolverError::SolverError;
};

/// sqrt(rho xi) reached cv exp(-1 - c* rho): the upper theta branch no longer exists.
struct MarginViolation : SolverError {
    using SolverError::SolverError;
};

struct BracketFailure : SolverError {
    using SolverError::SolverError;
};

struct WindowUnderflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tacsim
