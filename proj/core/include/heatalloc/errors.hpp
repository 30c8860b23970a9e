#pragma once

#include <stdexcept>
#include <string>

namespace heatalloc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or usage: a caller-side problem (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a structural or physical invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical problem: singular system, degenerate L-curve, non-finite input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised by the L-curve selector when the curve has no usable corner.
class DegenerateCurveError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace heatalloc
