#pragma once

#include <stdexcept>
#include <string>

namespace substlab {

// Invalid or inconsistent model data (bad alphabet, rules, weights, ...).
// Mapped to exit code 2 by the CLI.
class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// A computation would exceed a configured resource budget.
// Mapped to exit code 3 by the CLI.
class budget_error : public std::runtime_error {
 public:
  budget_error(const std::string& what, std::uint64_t required, std::uint64_t allowed)
      : std::runtime_error(what + " (required " + std::to_string(required) +
                           ", budget " + std::to_string(allowed) + ")"),
        required_(required),
        allowed_(allowed) {}

  std::uint64_t required() const { return required_; }
  std::uint64_t allowed() const { return allowed_; }

 private:
  std::uint64_t required_;
  std::uint64_t allowed_;
};

// Iterative solver failed to reach the requested tolerance. Carries the last
// residual as a diagnostic (tiny spectral gap or a non-primitive system).
// Mapped to exit code 4 by the CLI.
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, double last_residual)
      : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}

  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

// Operation requires structure the given system does not have
// (e.g. constant length).
class unsupported_structure_error : public std::runtime_error {
 public:
  explicit unsupported_structure_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace substlab
