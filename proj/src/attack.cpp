#include "sparsevo/attack.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "sparsevo/errors.hpp"

namespace sparsevo {

std::vector<TraceEntry> AttackTrace::downsampled() const {
  if (entries_.size() <= 1000) return entries_;
  std::vector<TraceEntry> out;
  for (const auto& e : entries_) {
    if (e.query % 10 == 0) out.push_back(e);
  }
  if (out.empty() || out.back().query != entries_.back().query) out.push_back(entries_.back());
  return out;
}

void AttackTrace::write_csv(std::ostream& out) const {
  out << "query,best_fitness,best_sparsity\n";
  char buf[96];
  for (const auto& e : downsampled()) {
    if (std::isinf(e.best_fitness)) {
      std::snprintf(buf, sizeof(buf), "%llu,inf,%.10g\n", static_cast<unsigned long long>(e.query),
                    e.best_sparsity);
    } else {
      std::snprintf(buf, sizeof(buf), "%llu,%.10g,%.10g\n", static_cast<unsigned long long>(e.query),
                    e.best_fitness, e.best_sparsity);
    }
    out << buf;
  }
}

std::uint64_t verify_start(const ImageTensor& start, const AttackGoal& goal, DecisionOracle& oracle) {
  if (!goal.satisfied_by(oracle.predict(start))) {
    throw ContractError("starting image does not satisfy the attack goal");
  }
  return 1;
}

}  // namespace sparsevo
