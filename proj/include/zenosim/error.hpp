#pragma once

#include <stdexcept>
#include <string>

namespace zenosim {

// Bad input: a precondition or configuration check failed before any compute.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// The computation itself failed (positivity, convergence, resolution).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PositivityViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoInteriorOptimum : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonUnimodal : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NegativeEigenvalue : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepTooCoarse : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TruncationAuditFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace zenosim
