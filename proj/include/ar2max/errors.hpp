#pragma once

#include <stdexcept>
#include <string>

namespace ar2max {

// Input/contract violations. The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures detected at run time. CLI exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SignConditionViolated : ValidationError {
  using ValidationError::ValidationError;
};

struct NonStationary : ValidationError {
  using ValidationError::ValidationError;
};

struct ModeMismatch : ValidationError {
  using ValidationError::ValidationError;
};

struct InvalidInterval : ValidationError {
  using ValidationError::ValidationError;
};

struct GridTooLarge : ValidationError {
  using ValidationError::ValidationError;
};

struct BetaUndefined : ValidationError {
  using ValidationError::ValidationError;
};

struct MismatchedThreshold : ValidationError {
  using ValidationError::ValidationError;
};

struct NonFiniteEntry : NumericalError {
  using NumericalError::NumericalError;
};

struct DefectiveOrIllConditioned : NumericalError {
  using NumericalError::NumericalError;
};

struct EigenvalueNearZero : NumericalError {
  using NumericalError::NumericalError;
};

struct ImaginaryResidueTooLarge : NumericalError {
  using NumericalError::NumericalError;
};

struct ComplexLeadingEigenvalue : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace ar2max
