// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dbm {

// Argument outside the mathematical domain of an operation (negative
// activity, negative variance, s < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input is valid in principle but not supported by the requested method
// (non-Gaussian field for the nested solver, zero-weight layer, N too large).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Two routes that must agree mathematically disagreed beyond tolerance.
// Always a bug signal.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An iterative solver ran out of iterations. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> last_iterate,
                   double residual)
      : std::runtime_error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
};

}  // namespace dbm
