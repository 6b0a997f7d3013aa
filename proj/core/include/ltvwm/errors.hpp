#pragma once

#include <stdexcept>
#include <string>

namespace ltvwm {

/// Vector/matrix shapes disagree with the system dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Step index outside [0, horizon).
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A covariance or scale matrix is not symmetric positive definite.
class NotPositiveDefinite : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An eigenvalue fell below the conditioning floor.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No delay up to kappa_max makes the watermark visible in the measurement.
class WatermarkUnobservable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few samples or realizations for the requested estimate.
class InsufficientSamples : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A replay source does not cover the requested step.
class ReplayExhausted : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Normalization tables were built for a different system.
class FingerprintMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or configuration.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ltvwm
