#pragma once

#include <cstdint>
#include <vector>

#include "sparsevo/attack.hpp"
#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"
#include "sparsevo/rng.hpp"

namespace sparsevo {

struct PointwiseParams {
  /// n_p: coordinates reset per query; 1 is the published Pointwise.
  std::size_t selections_per_query = 1;
  std::uint64_t query_limit = 1000;
  std::uint64_t rng_seed = 0;
  bool verify_start = true;

  void validate() const;
};

/// Greedy coordinate reset. Starting from x', each query resets n_p random
/// (channel, pixel) coordinates that still differ from x back to x's values
/// and keeps the batch only if the goal still holds.
AttackResult pointwise_attack(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                              DecisionOracle& oracle, const PointwiseParams& params);
AttackResult pointwise_attack(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                              DecisionOracle& oracle, const PointwiseParams& params, QueryBudget& budget);

struct SaltPepperSchedule {
  std::vector<double> densities{0.01, 0.02, 0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  std::size_t repeats = 10;

  /// Densities strictly increasing in (0, 1]; repeats >= 1.
  void validate() const;
};

struct SaltPepperResult {
  ImageTensor image;
  double density = 0.0;
  std::uint64_t queries = 0;
};

/// Untargeted starting point: for each density rho, up to `repeats` times,
/// saturates ceil(rho * W * H) random pixels of x (all channels to 0 or to 1)
/// and returns the first image not labelled `source_label`. One query per trial.
/// Throws InitializationFailed when the schedule runs out.
SaltPepperResult salt_pepper_init(const ImageTensor& source, Label source_label, BudgetedOracle& oracle,
                                  const SaltPepperSchedule& schedule, Rng& rng);

enum class ProjectionNorm { l1, l2 };
ProjectionNorm parse_projection_norm(const std::string& text);

/// Pixel indices sorted by decreasing per-pixel difference between x_adv and x
/// (ties by index).
std::vector<std::size_t> projection_order(const ImageTensor& source, const ImageTensor& adversarial,
                                          ProjectionNorm norm);

/// x with the first k pixels of `order` taken from `adversarial`.
ImageTensor keep_top_k(const ImageTensor& source, const ImageTensor& adversarial,
                       std::span<const std::size_t> order, std::size_t k);

struct ProjectionResult {
  ImageTensor projected;
  std::size_t k = 0;
  std::uint64_t probes = 0;
  bool budget_exhausted = false;
};

/// Binary search for the smallest k whose top-k projection still satisfies the
/// goal. Feasibility at k = 0 is probed too; the upper end starts at the number
/// of differing pixels, where the projection equals x_adv. On budget exhaustion
/// the smallest verified k so far is returned.
ProjectionResult l0_project_binary_search(const ImageTensor& source, const ImageTensor& adversarial,
                                          const AttackGoal& goal, BudgetedOracle& oracle,
                                          ProjectionNorm norm = ProjectionNorm::l1);

}  // namespace sparsevo
