#pragma once

#include <stdexcept>
#include <string>

namespace gyrostat {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad parameters, non-unit Poisson vector, bad config.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// The gyrostatic moment lies in a principal plane or two inverse moments coincide.
class NonGenericParams : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Base for failures of a numerical procedure on valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PoleError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OutOfRange : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonMonotone : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
 public:
  StepFailure(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class SolveFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptyLevel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TraceStall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Raised by q_factor; `factor()` names the failing part of the radicand.
class DomainError : public NumericalError {
 public:
  enum class Factor { Numerator, Denominator };

  DomainError(const std::string& what, Factor factor) : NumericalError(what), factor_(factor) {}
  Factor factor() const noexcept { return factor_; }

 private:
  Factor factor_;
};

}  // namespace gyrostat
