#pragma once

#include <stdexcept>
#include <string>

namespace optoact {

/// Input violates a documented precondition (shape, symmetry, physicality,
/// parameter range, malformed file). Maps to CLI exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed on valid input. Maps to CLI exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drift matrix is not Hurwitz, so no stationary covariance exists.
class NoSteadyStateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Adaptive integration could not make progress.
class StiffnessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Self-consistent mean field has no admissible (real, stable) root.
class MultistabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace optoact
