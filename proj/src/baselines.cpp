#include "sparsevo/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsevo/errors.hpp"

namespace sparsevo {

void PointwiseParams::validate() const {
  if (selections_per_query < 1) throw ContractError("pointwise needs n_p >= 1");
}

AttackResult pointwise_attack(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                              DecisionOracle& oracle, const PointwiseParams& params) {
  QueryBudget budget(params.query_limit);
  return pointwise_attack(source, start, goal, oracle, params, budget);
}

AttackResult pointwise_attack(const ImageTensor& source, const ImageTensor& start, const AttackGoal& goal,
                              DecisionOracle& oracle, const PointwiseParams& params, QueryBudget& budget) {
  params.validate();
  if (source.shape() != start.shape()) throw ContractError("source and start shapes differ");

  AttackResult result;
  if (params.verify_start) result.setup_queries = verify_start(start, goal, oracle);

  Rng rng(params.rng_seed);
  const std::uint64_t used_before = budget.used();
  const std::size_t pixels = source.pixels();
  ImageTensor current = start;

  // Flat (channel-major) indices of coordinates where current != source.
  std::vector<std::size_t> open;
  for (std::size_t k = 0; k < source.data().size(); ++k) {
    if (source.data()[k] != start.data()[k]) open.push_back(k);
  }

  double fitness = l2_distance(source, current);
  double sparsity = pixel_sparsity(source, current);
  bool observed = params.verify_start;
  std::vector<float> saved;
  while (!budget.exhausted() && !open.empty()) {
    const auto picked = rng.sample(open, params.selections_per_query);
    saved.clear();
    for (std::size_t k : picked) {
      saved.push_back(current.at(k / pixels, k % pixels));
      current.set(k / pixels, k % pixels, source.at(k / pixels, k % pixels));
    }
    budget.charge();
    if (goal.satisfied_by(oracle.predict(current))) {
      open.erase(open.begin(), open.begin() + static_cast<std::ptrdiff_t>(picked.size()));
      observed = true;
      fitness = l2_distance(source, current);
      sparsity = pixel_sparsity(source, current);
    } else {
      for (std::size_t i = 0; i < picked.size(); ++i) {
        current.set(picked[i] / pixels, picked[i] % pixels, saved[i]);
      }
    }
    result.trace.record(budget.used() - used_before, fitness, sparsity);
  }

  result.final_mask = seed_vector(source, current);
  result.sparsity = pixel_sparsity(source, current);
  result.adversarial = std::move(current);
  result.queries_used = budget.used() - used_before;
  result.success = observed;
  return result;
}

void SaltPepperSchedule::validate() const {
  if (densities.empty()) throw ContractError("salt-and-pepper schedule is empty");
  if (repeats < 1) throw ContractError("salt-and-pepper repeats must be >= 1");
  double prev = 0.0;
  for (double d : densities) {
    if (!(d > prev && d <= 1.0)) throw ContractError("salt-and-pepper densities must increase within (0, 1]");
    prev = d;
  }
}

SaltPepperResult salt_pepper_init(const ImageTensor& source, Label source_label, BudgetedOracle& oracle,
                                  const SaltPepperSchedule& schedule, Rng& rng) {
  schedule.validate();
  const std::size_t pixels = source.pixels();
  const std::uint64_t used_before = oracle.budget().used();
  std::vector<std::size_t> pool(pixels);
  for (double density : schedule.densities) {
    const auto count = static_cast<std::size_t>(std::ceil(density * static_cast<double>(pixels) - 1e-9));
    for (std::size_t r = 0; r < schedule.repeats; ++r) {
      ImageTensor noisy = source;
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i : rng.sample(pool, count)) {
        const float v = rng.coin() ? 1.0f : 0.0f;
        for (std::size_t c = 0; c < source.channels(); ++c) noisy.set(c, i, v);
      }
      if (oracle.query(noisy) != source_label) {
        return {std::move(noisy), density, oracle.budget().used() - used_before};
      }
    }
  }
  throw InitializationFailed("salt-and-pepper schedule exhausted without a misclassification");
}

ProjectionNorm parse_projection_norm(const std::string& text) {
  if (text == "l1") return ProjectionNorm::l1;
  if (text == "l2") return ProjectionNorm::l2;
  throw ContractError("projection norm must be l1 or l2, got '" + text + "'");
}

std::vector<std::size_t> projection_order(const ImageTensor& source, const ImageTensor& adversarial,
                                          ProjectionNorm norm) {
  if (source.shape() != adversarial.shape()) throw ContractError("projection: image shapes differ");
  const std::size_t pixels = source.pixels();
  std::vector<double> diff(pixels, 0.0);
  for (std::size_t c = 0; c < source.channels(); ++c) {
    for (std::size_t i = 0; i < pixels; ++i) {
      const double d = static_cast<double>(adversarial.at(c, i)) - static_cast<double>(source.at(c, i));
      diff[i] += norm == ProjectionNorm::l1 ? std::abs(d) : d * d;
    }
  }
  std::vector<std::size_t> order(pixels);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return diff[a] > diff[b]; });
  return order;
}

ImageTensor keep_top_k(const ImageTensor& source, const ImageTensor& adversarial,
                       std::span<const std::size_t> order, std::size_t k) {
  PixelMask mask(source.width(), source.height());
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) mask.set(order[i], true);
  return compose(source, adversarial, mask);
}

ProjectionResult l0_project_binary_search(const ImageTensor& source, const ImageTensor& adversarial,
                                          const AttackGoal& goal, BudgetedOracle& oracle, ProjectionNorm norm) {
  const auto order = projection_order(source, adversarial, norm);
  const auto differing = static_cast<std::int64_t>(differing_pixels(source, adversarial));

  ProjectionResult result;
  result.projected = adversarial;
  result.k = static_cast<std::size_t>(differing);
  // Invariant: `hi` is feasible (verified or the input itself), `lo` is not.
  std::int64_t lo = -1;
  std::int64_t hi = differing;
  while (hi - lo > 1) {
    if (oracle.budget().exhausted()) {
      result.budget_exhausted = true;
      break;
    }
    const std::int64_t k = lo + (hi - lo) / 2;
    ImageTensor candidate = keep_top_k(source, adversarial, order, static_cast<std::size_t>(k));
    ++result.probes;
    if (goal.satisfied_by(oracle.query(candidate))) {
      hi = k;
      result.projected = std::move(candidate);
      result.k = static_cast<std::size_t>(k);
    } else {
      lo = k;
    }
  }
  return result;
}

}  // namespace sparsevo
