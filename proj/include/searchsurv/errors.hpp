#pragma once

#include <stdexcept>
#include <string>

namespace searchsurv {

// Base of every error raised by the library. The CLI maps the two families
// below onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent input data / arguments (CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InsufficientHistory : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateInput : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IngestionError : public ValidationError {
 public:
  IngestionError(const std::string& file, std::size_t line, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit IngestionError(const std::string& what) : ValidationError(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

class EnsembleEmpty : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numerical failures (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double kkt_violation)
      : NumericalError(what), kkt_violation_(kkt_violation) {}

  double kkt_violation() const noexcept { return kkt_violation_; }

 private:
  double kkt_violation_;
};

}  // namespace searchsurv
