#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace qhedge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-finite entries, mismatched dimensions, bad ranges.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a problem precondition (rank, PSD).
class InvalidProblem : public Error {
 public:
  using Error::Error;
};

/// The quadratic form is unbounded below on the constraint set. `direction`
/// lies in Null(C) and Null(A) and strictly decreases q when followed.
class UnboundedProblem : public Error {
 public:
  UnboundedProblem(std::string what, Eigen::VectorXd direction)
      : Error(std::move(what)), direction_(std::move(direction)) {}

  const Eigen::VectorXd& direction() const noexcept { return direction_; }

 private:
  Eigen::VectorXd direction_;
};

/// Local no-arbitrage b in Ran(c) + Ran(1) fails (one-step QP unbounded).
class LocalArbitrage : public Error {
 public:
  using Error::Error;
};

class InvalidNumeraire : public Error {
 public:
  using Error::Error;
};

/// A frontier denominator vanishes.
class DegenerateFrontier : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

}  // namespace qhedge
