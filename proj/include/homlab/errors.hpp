#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homlab {

/// Invalid ensemble, run or file configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent arguments (shape mismatch, out-of-range index, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested domain or dense system exceeds a size limit.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Dense factorization hit a (numerically) singular matrix.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solve did not reach the requested tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Ensemble run aborted: too many failed samples or a broken checkpoint.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace homlab
