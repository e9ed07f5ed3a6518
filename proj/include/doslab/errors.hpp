#pragma once

#include <stdexcept>
#include <string>

namespace doslab {

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine failed: no bracket, no convergence, bad quadrature.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Root finder was handed an interval without a sign change.
class BracketError : public SolverError {
 public:
  using SolverError::SolverError;
};

/// Iteration cap reached; carries the best iterate seen.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double best)
      : SolverError(what), best_(best) {}
  double best() const noexcept { return best_; }

 private:
  double best_;
};

/// Objective returned a non-finite value at `point`.
class EvaluationError : public SolverError {
 public:
  EvaluationError(const std::string& what, double point)
      : SolverError(what), point_(point) {}
  double point() const noexcept { return point_; }

 private:
  double point_;
};

/// A user-supplied backoff function violates the policy contract.
class PolicyError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Threshold too high for the simulator to ever transmit in reasonable time.
class StarvationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace doslab
