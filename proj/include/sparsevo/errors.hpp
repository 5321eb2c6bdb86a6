#pragma once

#include <stdexcept>
#include <string>

namespace sparsevo {

/// Violated precondition: bad shapes, out-of-range coordinates, invalid params.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised before a query would exceed the query budget.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("query budget exhausted") {}
};

/// Remote oracle failure: I/O, malformed frame, id mismatch, server error.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No adversarial starting point could be produced.
class InitializationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sparsevo
