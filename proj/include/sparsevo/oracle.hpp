#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "sparsevo/image.hpp"

namespace sparsevo {

/// Label-only classifier. Every predict() call is one query; the counter is
/// bumped before the model runs, so a failed remote call still counts.
class DecisionOracle {
 public:
  virtual ~DecisionOracle() = default;

  Label predict(const ImageTensor& image) {
    ++queries_;
    return classify(image);
  }

  virtual int num_classes() const = 0;
  std::uint64_t query_count() const { return queries_; }

 protected:
  virtual Label classify(const ImageTensor& image) = 0;

 private:
  std::uint64_t queries_ = 0;
};

/// Wraps another oracle and counts the calls routed through it.
class CountingOracle final : public DecisionOracle {
 public:
  explicit CountingOracle(DecisionOracle& inner) : inner_(inner) {}
  int num_classes() const override { return inner_.num_classes(); }

 protected:
  Label classify(const ImageTensor& image) override { return inner_.predict(image); }

 private:
  DecisionOracle& inner_;
};

/// Oracle backed by an arbitrary function; mostly for tests and scripted fixtures.
class FunctionOracle final : public DecisionOracle {
 public:
  using Fn = std::function<Label(const ImageTensor&)>;
  FunctionOracle(int num_classes, Fn fn) : num_classes_(num_classes), fn_(std::move(fn)) {}
  int num_classes() const override { return num_classes_; }

 protected:
  Label classify(const ImageTensor& image) override { return fn_(image); }

 private:
  int num_classes_;
  Fn fn_;
};

class QueryBudget {
 public:
  explicit QueryBudget(std::uint64_t limit) : limit_(limit) {}

  std::uint64_t limit() const { return limit_; }
  std::uint64_t used() const { return used_; }
  std::uint64_t remaining() const { return limit_ - used_; }
  bool exhausted() const { return used_ >= limit_; }

  /// Throws BudgetExhausted when no query is left.
  void charge();

 private:
  std::uint64_t limit_;
  std::uint64_t used_ = 0;
};

/// An oracle seen through a budget: query() charges first, then predicts.
class BudgetedOracle {
 public:
  BudgetedOracle(DecisionOracle& oracle, QueryBudget& budget) : oracle_(oracle), budget_(budget) {}

  Label query(const ImageTensor& image) {
    budget_.charge();
    return oracle_.predict(image);
  }

  DecisionOracle& oracle() { return oracle_; }
  QueryBudget& budget() { return budget_; }
  const QueryBudget& budget() const { return budget_; }

 private:
  DecisionOracle& oracle_;
  QueryBudget& budget_;
};

class ToyModel;

using OracleFactory = std::function<std::unique_ptr<DecisionOracle>()>;

/// Parses a CLI selector into a factory producing independent oracle instances:
///   toy:linear:<seed>  toy:mlp2:<seed>  toy:centroid:<path>
///   exec:<command>     tcp:<host>:<port>
/// `shape` and `num_classes` size the seeded toy models; remote oracles take
/// both from the server handshake and centroid files carry their own.
OracleFactory parse_oracle_selector(const std::string& selector, Shape shape, int num_classes);

/// The toy:* subset of the selectors, returning the shared model itself.
std::shared_ptr<const ToyModel> parse_toy_selector(const std::string& selector, Shape shape, int num_classes);

}  // namespace sparsevo
