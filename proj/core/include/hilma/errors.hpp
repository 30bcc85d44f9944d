#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hilma {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A parameter or random-parameter value lies outside the model's domain /
// support. Messages name the offending coordinate, e.g. "y_mis[2] = -1 ...".
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (CSV parse failures, shape mismatches,
// observed values incompatible with the declared model, all-missing response).
class DataError : public Error {
 public:
  using Error::Error;
};

// An iteration budget was exhausted or a line search failed. Carries the last
// iterate and the gradient norm so callers can diagnose or restart.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, std::vector<double> last_iterate,
                   double grad_norm)
      : Error(msg), last_iterate(std::move(last_iterate)), grad_norm(grad_norm) {}
  explicit ConvergenceError(const std::string& msg) : Error(msg), grad_norm(0) {}
  std::vector<double> last_iterate;
  double grad_norm;
};

// Singular information: a matrix that must be invertible is numerically rank
// deficient.
class RankError : public Error {
 public:
  using Error::Error;
};

// Curvature unusable for inference (e.g. indefinite random-parameter block at
// the reported solution).
class CurvatureError : public Error {
 public:
  using Error::Error;
};

// Iterates escaped to the boundary of the parameter domain (e.g. a variance
// driven to zero or infinity).
class BoundaryError : public Error {
 public:
  using Error::Error;
};

// The caller violated an API precondition (wrong block scale, empty
// estimator list, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A requested capability is not available for the given model (no registered
// EM step, no normalizing transformation, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace hilma
