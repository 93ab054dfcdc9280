#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hsn {

/// Base for every violated precondition reported by the library.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public PreconditionError {
 public:
  DimensionMismatch(const std::string& where, long expected, long actual)
      : PreconditionError(where + ": dimension mismatch (expected " + std::to_string(expected) +
                          ", got " + std::to_string(actual) + ")"),
        expected_(expected),
        actual_(actual) {}

  long expected() const noexcept { return expected_; }
  long actual() const noexcept { return actual_; }

 private:
  long expected_;
  long actual_;
};

class NonFiniteInput : public PreconditionError {
 public:
  explicit NonFiniteInput(const std::string& where)
      : PreconditionError(where + ": non-finite input") {}
};

class InvalidArgument : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Cholesky failed or the condition estimate exceeded the configured cap.
class SingularMatrix : public std::runtime_error {
 public:
  SingularMatrix(const std::string& where, double condition_estimate)
      : std::runtime_error(where + ": matrix is singular to tolerance (condition estimate " +
                           std::to_string(condition_estimate) + ")"),
        condition_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_; }

 private:
  double condition_;
};

/// A NaN or Inf appeared while stepping an optimizer.
class NonFiniteState : public std::runtime_error {
 public:
  NonFiniteState(const std::string& what_happened, std::uint64_t step)
      : std::runtime_error(what_happened + " at step " + std::to_string(step)), step_(step) {}

  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& where, double gradient_norm, int iterations)
      : std::runtime_error(where + ": no convergence after " + std::to_string(iterations) +
                           " iterations (gradient norm " + std::to_string(gradient_norm) + ")"),
        gradient_norm_(gradient_norm) {}

  double gradient_norm() const noexcept { return gradient_norm_; }

 private:
  double gradient_norm_;
};

/// Wraps a failure that happened inside a particular replication or stream position.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& context, std::uint64_t index, const std::exception& inner)
      : std::runtime_error(context + " " + std::to_string(index) + ": " + inner.what()),
        index_(index) {}

  std::uint64_t index() const noexcept { return index_; }

 private:
  std::uint64_t index_;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsn
