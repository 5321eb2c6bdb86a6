#include "sparsevo/sparse_evo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsevo/errors.hpp"

namespace sparsevo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
  double fitness = kInf;
  double sparsity = 1.0;
};

Evaluation evaluate(const ImageTensor& source, const ImageTensor& start, const PixelMask& mask,
                    const AttackGoal& goal, BudgetedOracle& oracle) {
  oracle.budget().charge();
  const ImageTensor candidate = compose(source, start, mask);
  const Label label = oracle.oracle().predict(candidate);
  Evaluation e;
  e.sparsity = pixel_sparsity(source, candidate);
  if (goal.satisfied_by(label)) e.fitness = l2_distance(source, candidate);
  return e;
}

Population initialise(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                      BudgetedOracle& oracle, const EvoParams& params, Rng& rng, AttackTrace* trace,
                      std::uint64_t trace_offset) {
  const PixelMask seed = seed_vector(source, start);
  const std::size_t ones = seed.popcount();
  if (ones == 0) throw ContractError("starting image equals the source image");
  std::size_t d = floor_count(params.init_rate * static_cast<double>(source.pixels()));
  if (d >= ones) d = ones - 1;

  const std::vector<std::size_t> seed_ones = seed.ones();
  const double start_sparsity = static_cast<double>(ones) / static_cast<double>(source.pixels());
  Population pop;
  double best_fitness = kInf;
  double best_sparsity = start_sparsity;
  while (pop.size() < params.population_size) {
    if (oracle.budget().exhausted()) {
      if (!pop.members.empty()) pop.update_extremes();
      throw IncompletePopulation(std::move(pop));
    }
    PixelMask candidate = seed;
    std::vector<std::size_t> pool = seed_ones;
    for (std::size_t i : rng.sample(pool, d)) candidate.set(i, false);
    const Evaluation e = evaluate(source, start, candidate, goal, oracle);
    if (std::isfinite(e.fitness)) {
      pop.members.push_back(std::move(candidate));
      pop.fitness.push_back(e.fitness);
      pop.sparsity.push_back(e.sparsity);
      if (e.fitness < best_fitness) {
        best_fitness = e.fitness;
        best_sparsity = e.sparsity;
      }
    }
    if (trace) trace->record(trace_offset + oracle.budget().used(), best_fitness, best_sparsity);
  }
  pop.update_extremes();
  return pop;
}

/// Two distinct members other than the best (the same one twice when p = 2).
std::pair<std::size_t, std::size_t> pick_parents(const Population& pop, Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    if (i != pop.best) pool.push_back(i);
  }
  if (pool.size() == 1) return {pool[0], pool[0]};
  auto picked = rng.sample(pool, 2);
  return {picked[0], picked[1]};
}

PixelMask recombine(const Population& pop, RecombinationScheme scheme, Rng& rng) {
  if (scheme == RecombinationScheme::best_plus_two) {
    const auto [j, q] = pick_parents(pop, rng);
    return binary_differential_recombination(pop.members[pop.best], pop.members[j], pop.members[q], rng);
  }
  std::vector<std::size_t> pool(pop.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  if (pool.size() >= 3) {
    auto picked = rng.sample(pool, 3);
    return binary_differential_recombination(pop.members[picked[2]], pop.members[picked[0]],
                                             pop.members[picked[1]], rng);
  }
  return binary_differential_recombination(pop.members[rng.index(pop.size())],
                                           pop.members[rng.index(pop.size())],
                                           pop.members[rng.index(pop.size())], rng);
}

}  // namespace

MutationScheme MutationScheme::parse(const std::string& text) {
  if (text == "ones" || text == "ones_only") return ones_only();
  if (text.starts_with("mixed:")) {
    std::size_t used = 0;
    double beta = 0.0;
    try {
      beta = std::stod(text.substr(6), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size() - 6) throw ContractError("bad mutation scheme '" + text + "'");
    return mixed(beta);
  }
  throw ContractError("mutation scheme must be 'ones' or 'mixed:<beta>', got '" + text + "'");
}

std::string MutationScheme::to_string() const {
  if (kind == Kind::ones_only) return "ones";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mixed:%g", beta);
  return buf;
}

RecombinationScheme parse_recombination(const std::string& text) {
  if (text == "best_plus_two") return RecombinationScheme::best_plus_two;
  if (text == "three_random") return RecombinationScheme::three_random;
  throw ContractError("recombination scheme must be best_plus_two or three_random, got '" + text + "'");
}

std::string to_string(RecombinationScheme scheme) {
  return scheme == RecombinationScheme::best_plus_two ? "best_plus_two" : "three_random";
}

void EvoParams::validate() const {
  if (population_size < 2) throw ContractError("population size must be at least 2");
  if (!(init_rate > 0.0 && init_rate <= 1.0)) throw ContractError("init rate must be in (0, 1]");
  if (!(mutation_rate > 0.0 && mutation_rate <= 1.0)) throw ContractError("mutation rate must be in (0, 1]");
  if (mutation.kind == MutationScheme::Kind::mixed && !(mutation.beta > 0.0 && mutation.beta < 1.0)) {
    throw ContractError("mixed mutation needs 0 < beta < 1");
  }
  if (mutation_floor != 0 && mutation_floor != 1) throw ContractError("mutation floor must be 0 or 1");
  if (!free_init && query_limit < population_size) {
    throw ContractError("query limit must cover population initialization (T >= p)");
  }
}

void Population::update_extremes() {
  best = 0;
  worst = 0;
  for (std::size_t i = 1; i < fitness.size(); ++i) {
    if (fitness[i] < fitness[best]) best = i;
    if (fitness[i] > fitness[worst]) worst = i;
  }
}

std::size_t floor_count(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 1e-9));
}

PixelMask binary_differential_recombination(const PixelMask& best, const PixelMask& vj,
                                            const PixelMask& vq, Rng& rng) {
  if (best.size() != vj.size() || best.size() != vq.size()) {
    throw ContractError("recombination: mask lengths differ");
  }
  std::vector<std::uint8_t> out(best.size());
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i % 64 == 0) word = rng.bits();
    const bool from_j = (word >> (i % 64)) & 1;
    out[i] = best[i] && (from_j ? vj[i] : vq[i]);
  }
  return PixelMask(best.width(), std::move(out));
}

PixelMask mutate(const PixelMask& v, double rate, const MutationScheme& scheme, Rng& rng, int floor) {
  std::vector<std::size_t> ones = v.ones();
  if (ones.empty()) return v;
  const std::size_t min_flips = floor > 0 ? 1 : 0;
  PixelMask out = v;
  if (scheme.kind == MutationScheme::Kind::ones_only) {
    const std::size_t k = std::max(min_flips, floor_count(rate * static_cast<double>(ones.size())));
    for (std::size_t i : rng.sample(ones, k)) out.set(i, false);
    return out;
  }
  const double beta = scheme.beta;
  const std::size_t n = std::max(min_flips, floor_count(rate * beta * static_cast<double>(ones.size())));
  const std::size_t z = floor_count(static_cast<double>(n) * (1.0 - beta) / beta);
  std::vector<std::size_t> zeros = v.zeros();
  for (std::size_t i : rng.sample(ones, n)) out.set(i, false);
  for (std::size_t i : rng.sample(zeros, z)) out.set(i, true);
  return out;
}

double fitness(const ImageTensor& source, const ImageTensor& start, const PixelMask& mask,
               const AttackGoal& goal, BudgetedOracle& oracle) {
  return evaluate(source, start, mask, goal, oracle).fitness;
}

Population initialise_population(const ImageTensor& source, const ImageTensor& start,
                                 const AttackGoal& goal, BudgetedOracle& oracle,
                                 const EvoParams& params, Rng& rng, AttackTrace* trace) {
  return initialise(source, start, goal, oracle, params, rng, trace, 0);
}

AttackResult run_sparse_evo(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                            DecisionOracle& oracle, const EvoParams& params) {
  params.validate();
  QueryBudget budget(params.query_limit);
  return run_sparse_evo(source, start, goal, oracle, params, budget);
}

AttackResult run_sparse_evo(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                            DecisionOracle& oracle, const EvoParams& params, QueryBudget& budget) {
  EvoParams checked = params;
  checked.free_init = true;  // the caller's budget may legitimately be below p
  checked.validate();
  if (source.shape() != start.shape()) throw ContractError("source and start shapes differ");

  AttackResult result;
  if (params.verify_start) result.setup_queries = verify_start(start, goal, oracle);

  Rng rng(params.rng_seed);
  const std::uint64_t used_before = budget.used();
  QueryBudget init_allowance(params.free_init ? budget.remaining() : 0);
  BudgetedOracle main_oracle(oracle, budget);
  BudgetedOracle init_oracle(oracle, params.free_init ? init_allowance : budget);
  // Trace query indices count every charged query of this run.
  const auto charged = [&] {
    return (budget.used() - used_before) + (params.free_init ? init_allowance.used() : 0);
  };

  Population pop;
  bool complete = true;
  try {
    pop = initialise(source, start, goal, init_oracle, params, rng, &result.trace,
                     params.free_init ? 0 : std::uint64_t{0} - used_before);
  } catch (const IncompletePopulation& e) {
    pop = e.partial();
    complete = false;
  }

  if (complete) {
    while (!budget.exhausted()) {
      PixelMask offspring = recombine(pop, params.recombination, rng);
      offspring = mutate(offspring, params.mutation_rate, params.mutation, rng, params.mutation_floor);
      const Evaluation e = evaluate(source, start, offspring, goal, main_oracle);
      if (e.fitness < pop.fitness[pop.worst]) {
        pop.members[pop.worst] = std::move(offspring);
        pop.fitness[pop.worst] = e.fitness;
        pop.sparsity[pop.worst] = e.sparsity;
      }
      pop.update_extremes();
      result.trace.record(charged(), pop.fitness[pop.best], pop.sparsity[pop.best]);
    }
  }

  result.population_fitness = pop.fitness;
  if (!pop.members.empty()) {
    result.final_mask = pop.members[pop.best];
    result.success = std::isfinite(pop.fitness[pop.best]);
  } else {
    // Nothing accepted: fall back to the start itself (the full seed vector).
    result.final_mask = seed_vector(source, start);
    result.success = params.verify_start;
  }
  result.adversarial = compose(source, start, result.final_mask);
  result.sparsity = pixel_sparsity(source, result.adversarial);
  result.queries_used = charged();
  return result;
}

}  // namespace sparsevo
