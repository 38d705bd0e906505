#pragma once

#include <stdexcept>
#include <string>

namespace berknash {

// Malformed configuration or model document. Message carries the field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A declared domain constraint is violated (discount out of range, unbounded
// parameter box, negative support bound, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector/tensor shapes disagree.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A tabulated kernel was queried outside its grid.
class RangeError : public std::runtime_error {
 public:
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A truncation level received zero kernel mass at some grid point.
class TruncationError : public std::runtime_error {
 public:
  explicit TruncationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Value iteration detected sustained growth of the sup-norm change.
class ContractionError : public std::runtime_error {
 public:
  explicit ContractionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Power iteration hit max_iter with residual above tolerance.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Every parameter on the grid has infinite weighted KL divergence.
class NoDominatingParameterError : public std::runtime_error {
 public:
  explicit NoDominatingParameterError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Bayesian update observed a transition every model assigns zero mass to.
class ImpossibleObservationError : public std::runtime_error {
 public:
  explicit ImpossibleObservationError(const std::string& msg)
      : std::runtime_error(msg) {}
};

}  // namespace berknash
