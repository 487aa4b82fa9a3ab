#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace brlab {

// Parameter outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Symbol support reaches past the representable frequency ball.
class NyquistError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Work would exceed the configured lattice-point budget.
class BudgetError : public std::runtime_error {
 public:
  BudgetError(const std::string& what, std::uint64_t required)
      : std::runtime_error(what), required_(required) {}
  std::uint64_t required() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

// Quadrature failed to reach its tolerance within the refinement limit.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace brlab
