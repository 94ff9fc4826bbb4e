#pragma once

#include <stdexcept>
#include <string>

namespace multiflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent sizes, unknown names, out-of-range settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf or otherwise malformed numeric input.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (negative density, r <= 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// State for which a derived quantity is undefined (zero total density).
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

/// Linear solve did not reach the requested tolerance.
class SolveError : public Error {
 public:
  SolveError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Broken solver precondition that indicates a bug in the calling sequence.
class InternalError : public Error {
 public:
  using Error::Error;
};

/// Time step collapsed after repeated rejections.
class TimeStepUnderflow : public Error {
 public:
  using Error::Error;
};

/// File could not be written or read; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace multiflow
