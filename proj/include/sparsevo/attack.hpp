#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"

namespace sparsevo {

struct TraceEntry {
  std::uint64_t query = 0;
  double best_fitness = 0.0;
  double best_sparsity = 0.0;
};

/// One entry per oracle query, in query order.
class AttackTrace {
 public:
  void record(std::uint64_t query, double best_fitness, double best_sparsity) {
    entries_.push_back({query, best_fitness, best_sparsity});
  }
  const std::vector<TraceEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Past 1000 entries keep only queries divisible by 10, plus the last entry.
  std::vector<TraceEntry> downsampled() const;
  /// CSV with header query,best_fitness,best_sparsity (downsampled).
  void write_csv(std::ostream& out) const;

 private:
  std::vector<TraceEntry> entries_;
};

struct AttackResult {
  ImageTensor adversarial;
  PixelMask final_mask;
  double sparsity = 1.0;
  /// Queries charged to the attack budget.
  std::uint64_t queries_used = 0;
  /// Uncharged start-point verification queries.
  std::uint64_t setup_queries = 0;
  AttackTrace trace;
  /// Fitness of every member of the final population (SparseEvo only).
  std::vector<double> population_fitness;
  /// The oracle was observed to label `adversarial` as the goal requires.
  bool success = false;
};

/// Queries `start` once outside any budget; throws ContractError unless the
/// goal holds. Returns the number of queries spent (always 1).
std::uint64_t verify_start(const ImageTensor& start, const AttackGoal& goal, DecisionOracle& oracle);

}  // namespace sparsevo
