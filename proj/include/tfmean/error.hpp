#pragma once

#include <stdexcept>
#include <string>

namespace tfm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dimension, topology or length mismatch between inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure (non-convergence, NaN).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed spec string, config file or parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A theorem's precondition does not hold for the supplied values.
class InapplicableError : public Error {
 public:
  using Error::Error;
};

class UnboundedInverseError : public DomainError {
 public:
  using DomainError::DomainError;
};

class MissingMomentError : public Error {
 public:
  explicit MissingMomentError(const std::string& tag)
      : Error("missing moment: " + tag), tag_(tag) {}
  const std::string& tag() const noexcept { return tag_; }

 private:
  std::string tag_;
};

class NoAnalyticMeanError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace tfm
