#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsevo/attack.hpp"
#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"
#include "sparsevo/rng.hpp"

namespace sparsevo {

struct MutationScheme {
  enum class Kind { ones_only, mixed };
  Kind kind = Kind::ones_only;
  /// Share of flips that clear 1-bits; mixed only, in (0, 1).
  double beta = 0.0;

  static MutationScheme ones_only() { return {}; }
  static MutationScheme mixed(double beta) { return {Kind::mixed, beta}; }
  /// "ones" or "mixed:<beta>".
  static MutationScheme parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const MutationScheme&) const = default;
};

enum class RecombinationScheme {
  best_plus_two,  // best AND crossover(two random non-best members)
  three_random,   // third random member AND crossover(two other random members)
};
RecombinationScheme parse_recombination(const std::string& text);
std::string to_string(RecombinationScheme scheme);

struct EvoParams {
  std::size_t population_size = 10;
  double init_rate = 0.004;
  double mutation_rate = 0.04;
  std::uint64_t query_limit = 1000;
  MutationScheme mutation;
  RecombinationScheme recombination = RecombinationScheme::best_plus_two;
  /// Lower bound on the number of 1-bits a mutation clears (0 or 1).
  int mutation_floor = 1;
  /// Initialization queries get their own allowance of query_limit.
  bool free_init = false;
  /// Spend one uncharged query checking that the start satisfies the goal.
  bool verify_start = true;
  std::uint64_t rng_seed = 0;

  /// Throws ContractError unless p >= 2, 0 < alpha <= 1, 0 < mu <= 1,
  /// 0 < beta < 1 for mixed, floor in {0, 1} and T >= p (unless free_init).
  void validate() const;
};

struct Population {
  std::vector<PixelMask> members;
  std::vector<double> fitness;
  /// Pixel sparsity of each member's composed image.
  std::vector<double> sparsity;
  std::size_t best = 0;
  std::size_t worst = 0;

  std::size_t size() const { return members.size(); }
  /// Recomputes best/worst; ties go to the lowest index.
  void update_extremes();
};

/// Initialization ran out of budget before p members were accepted.
class IncompletePopulation : public std::runtime_error {
 public:
  explicit IncompletePopulation(Population partial)
      : std::runtime_error("query budget exhausted during population initialization"),
        partial_(std::move(partial)) {}
  const Population& partial() const { return partial_; }

 private:
  Population partial_;
};

/// floor(x) with a 1e-9 guard against products like 0.29 * 100 landing just below an integer.
std::size_t floor_count(double x);

/// best AND uniform_crossover(vj, vq); the result's 1-bits are a subset of best's.
PixelMask binary_differential_recombination(const PixelMask& best, const PixelMask& vj,
                                            const PixelMask& vq, Rng& rng);

/// ones_only clears max(floor, floor(mu * ones)) random 1-bits. mixed(beta)
/// clears n = max(floor, floor(mu * beta * ones)) 1-bits and sets
/// floor(n * (1 - beta) / beta) random 0-bits. An all-zero mask is returned as is.
PixelMask mutate(const PixelMask& v, double rate, const MutationScheme& scheme, Rng& rng,
                 int floor = 1);

/// One query; ||x - compose(x, x', v)||_2 if the goal holds, else +inf.
double fitness(const ImageTensor& source, const ImageTensor& start, const PixelMask& mask,
               const AttackGoal& goal, BudgetedOracle& oracle);

/// Each candidate clears d = floor(alpha * W * H) random 1-bits of
/// seed_vector(x, x'), clamped to popcount - 1, and is redrawn until it is
/// adversarial. Throws IncompletePopulation when the budget runs out first.
Population initialise_population(const ImageTensor& source, const ImageTensor& start,
                                 const AttackGoal& goal, BudgetedOracle& oracle,
                                 const EvoParams& params, Rng& rng, AttackTrace* trace = nullptr);

/// Runs the attack with budget params.query_limit.
AttackResult run_sparse_evo(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                            DecisionOracle& oracle, const EvoParams& params);

/// Same, drawing from a caller-owned budget (e.g. shared with a salt-and-pepper
/// initialization). params.query_limit is ignored; a budget smaller than p
/// degrades to the best partial population.
AttackResult run_sparse_evo(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                            DecisionOracle& oracle, const EvoParams& params, QueryBudget& budget);

}  // namespace sparsevo
