#pragma once

#include <stdexcept>
#include <string>

namespace dichot {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data (CSV contents, dataset invariants).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (scenario/study config files, CLI arguments).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Model fitting or estimation failure.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Design matrix is rank deficient on the observed rows.
class RankError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// Iterations exhausted without meeting the convergence tolerance.
class ConvergenceError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

/// Coefficients diverged on the logit scale (complete or quasi separation).
class SeparationError : public EstimationError {
 public:
  using EstimationError::EstimationError;
};

}  // namespace dichot
