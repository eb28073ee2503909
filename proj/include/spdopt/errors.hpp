#pragma once

#include <stdexcept>
#include <string>

namespace spdopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar function was evaluated outside its domain (log of a
/// non-positive eigenvalue, non-finite result, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix failed the SPD admission test.
class NotSpdError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Overflow of a matrix exponential.
class RangeError : public Error {
 public:
  using Error::Error;
};

class IllPosedError : public Error {
 public:
  using Error::Error;
};

class EigenSolverError : public Error {
 public:
  EigenSolverError(const std::string& what, int iterations)
      : Error(what + " (iteration cap " + std::to_string(iterations) + ")"),
        iterations_(iterations) {}

  int iterations() const noexcept { return iterations_; }

 private:
  int iterations_;
};

/// The exponential map left the admissible set (BW cone boundary, or an
/// overflowing/degenerate exponential). Solvers shrink the step on this.
class StepTooLongError : public Error {
 public:
  using Error::Error;
};

/// Non-descent direction handed to a line search.
class NotDescentError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace spdopt
