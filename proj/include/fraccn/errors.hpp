#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace fraccn {

/// Bad arguments or violated preconditions. Maps to CLI exit code 2.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Base class for failures of the numerical solver. Maps to CLI exit code 1.
class SolverFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class NonConvergence : public SolverFailure {
public:
  NonConvergence(const std::string& what, double last_residual, int iterations)
      : SolverFailure(what), last_residual_(last_residual), iterations_(iterations) {}

  double last_residual() const noexcept { return last_residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double last_residual_;
  int iterations_;
};

class SingularJacobian : public SolverFailure {
public:
  SingularJacobian(const std::string& what, std::size_t pivot_row)
      : SolverFailure(what), pivot_row_(pivot_row) {}

  std::size_t pivot_row() const noexcept { return pivot_row_; }

private:
  std::size_t pivot_row_;
};

/// A nonlinearity, its derivative or a source term produced NaN/Inf.
class NonFiniteValue : public SolverFailure {
public:
  using SolverFailure::SolverFailure;
};

/// Wraps a solver failure with the time step at which it happened.
class StepFailure : public SolverFailure {
public:
  StepFailure(const std::string& what, std::size_t step) : SolverFailure(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

} // namespace detail

} // namespace fraccn
