// End-to-end acceptance checks. Prints one line per criterion:
//   ACCEPTANCE <n> PASS|FAIL <name> :: <details> [<seconds>s / limit <limit>s]
// and exits non-zero if any criterion fails or exceeds its time limit.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

#include "sparsevo/baselines.hpp"
#include "sparsevo/harness.hpp"
#include "sparsevo/sparse_evo.hpp"
#include "sparsevo/toy_data.hpp"
#include "sparsevo/toy_models.hpp"

using namespace sparsevo;
namespace hs = sparsevo::harness;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

int failures = 0;

void run(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = out.pass && secs <= limit_seconds;
  if (!ok) ++failures;
  char timing[96];
  std::snprintf(timing, sizeof(timing), " [%.2fs / limit %.0fs]", secs, limit_seconds);
  std::cout << "ACCEPTANCE " << id << ' ' << (ok ? "PASS" : "FAIL") << ' ' << name << " :: " << out.details
            << timing << std::endl;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), f, a, b);
  return buf;
}

ImageTensor random_image(Shape shape, SplitMix64& gen) {
  std::vector<float> data(shape.size());
  for (auto& v : data) v = static_cast<float>(gen.next() % 256) / 255.0f;
  return ImageTensor(shape, std::move(data));
}

ImageTensor perturb(const ImageTensor& base, double p, SplitMix64& gen) {
  std::vector<float> data(base.data().begin(), base.data().end());
  const std::size_t pixels = base.pixels();
  for (std::size_t i = 0; i < pixels; ++i) {
    if (gen.next_unit() >= p) continue;
    const std::size_t c = gen.next() % base.channels();
    const float old = data[c * pixels + i];
    data[c * pixels + i] = old > 0.5f ? old - 0.25f : old + 0.25f;
  }
  return ImageTensor(base.shape(), std::move(data));
}

PixelMask random_mask(std::size_t w, std::size_t h, double p, SplitMix64& gen) {
  PixelMask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set(i, gen.next_unit() < p);
  return m;
}

double median(std::vector<double> v) { return hs::percentile(std::move(v), 0.5); }

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// 1. Mask algebra on random instances.
Outcome algebra() {
  SplitMix64 gen(2024);
  Rng rng(2024);
  std::size_t violations = 0;
  const int n = 10000;
  for (int t = 0; t < n; ++t) {
    const Shape shape{1 + gen.next() % 3, 1 + gen.next() % 16, 1 + gen.next() % 16};
    const auto x = random_image(shape, gen);
    const auto xs = perturb(x, gen.next_unit(), gen);
    const auto v = random_mask(shape.width, shape.height, gen.next_unit(), gen);
    const auto out = compose(x, xs, v);
    const auto seed = seed_vector(x, xs);
    for (std::size_t i = 0; i < shape.pixels(); ++i) {
      bool differs = false;
      for (std::size_t c = 0; c < shape.channels; ++c) {
        if (out.at(c, i) != (v[i] ? xs.at(c, i) : x.at(c, i))) ++violations;
        differs |= x.at(c, i) != xs.at(c, i);
      }
      if (seed[i] != differs) ++violations;
    }
    const auto vj = random_mask(shape.width, shape.height, 0.5, gen);
    const auto vq = random_mask(shape.width, shape.height, 0.5, gen);
    const auto r = binary_differential_recombination(v, vj, vq, rng);
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] && !v[i]) ++violations;
    }
  }
  return {violations == 0, std::to_string(n) + " instances, " + std::to_string(violations) + " violations"};
}

toy::FamilyParams family(Shape shape, int classes, std::size_t salient, float amplitude, std::uint64_t seed) {
  toy::FamilyParams fp;
  fp.shape = shape;
  fp.num_classes = classes;
  fp.salient_pixels = salient;
  fp.amplitude = amplitude;
  fp.seed = seed;
  return fp;
}

// 2. Trace monotonicity and a finite final population.
Outcome trace_monotone() {
  std::size_t bad_trace = 0, bad_pop = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto model = std::make_shared<NearestCentroidModel>(
        toy::make_centroid_family(family({3, 16, 16}, 4, 8, 0.35f, 500 + s)));
    const auto pair = toy::make_pairs(*model, 1, true, 900 + s).front();
    ToyOracle oracle(model);
    EvoParams p;
    p.query_limit = 500;
    p.init_rate = 0.02;
    p.rng_seed = s;
    const auto r = run_sparse_evo(pair.source, *pair.start,
                                  AttackGoal::targeted(pair.source_label, *pair.target_label), oracle, p);
    double last = INFINITY;
    for (const auto& e : r.trace.entries()) {
      if (e.best_fitness > last) ++bad_trace;
      last = e.best_fitness;
    }
    if (r.population_fitness.size() != p.population_size) ++bad_pop;
    for (double f : r.population_fitness) bad_pop += !std::isfinite(f);
  }
  return {bad_trace == 0 && bad_pop == 0, "100 runs, " + std::to_string(bad_trace) + " trace increases, " +
                                              std::to_string(bad_pop) + " non-finite members"};
}

// 3. Query accounting across every attack component.
Outcome accounting() {
  std::size_t mismatches = 0, runs = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto model = std::make_shared<NearestCentroidModel>(
        toy::make_centroid_family(family({3, 16, 16}, 4, 8, 0.35f, 700 + s)));
    const auto pair = toy::make_pairs(*model, 1, false, 800 + s).front();
    const auto goal = AttackGoal::untargeted(pair.source_label);
    const std::uint64_t budget = 200 + 37 * s;

    ToyOracle base(model);
    CountingOracle init_counter(base);
    QueryBudget init_budget(budget);
    BudgetedOracle init_oracle(init_counter, init_budget);
    Rng rng(s);
    const auto init = salt_pepper_init(pair.source, pair.source_label, init_oracle, {}, rng);
    mismatches += init.queries != init_counter.query_count() || init_budget.used() != init.queries;
    ++runs;

    {
      CountingOracle c(base);
      EvoParams p;
      p.query_limit = budget;
      p.rng_seed = s;
      const auto r = run_sparse_evo(pair.source, init.image, goal, c, p);
      mismatches += r.queries_used != budget || r.queries_used + r.setup_queries != c.query_count();
      ++runs;
    }
    for (std::size_t np : {1u, 8u}) {
      CountingOracle c(base);
      PointwiseParams p;
      p.selections_per_query = np;
      p.query_limit = budget;
      p.rng_seed = s;
      const auto r = pointwise_attack(pair.source, init.image, goal, c, p);
      mismatches += r.queries_used > budget || r.queries_used + r.setup_queries != c.query_count();
      ++runs;
    }
    {
      CountingOracle c(base);
      QueryBudget b(budget);
      BudgetedOracle bo(c, b);
      const auto r = l0_project_binary_search(pair.source, init.image, goal, bo);
      mismatches += r.probes != c.query_count() || b.used() != r.probes;
      ++runs;
    }
  }
  return {mismatches == 0, std::to_string(runs) + " runs, " + std::to_string(mismatches) + " count mismatches"};
}

/// Smallest popcount of a sub-mask of `seed` whose composition meets the goal,
/// searching popcounts up to `max_k`; returns max_k + 1 when none exists.
std::size_t brute_force_min(const ImageTensor& x, const ImageTensor& xs, const AttackGoal& goal,
                            const ToyModel& model, std::size_t max_k) {
  const auto ones = seed_vector(x, xs).ones();
  const std::size_t n = ones.size();
  for (std::size_t k = 0; k <= std::min(max_k, n); ++k) {
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), 0);
    for (;;) {
      PixelMask m(x.width(), x.height());
      for (std::size_t i : idx) m.set(ones[i], true);
      if (goal.satisfied_by(model.classify(compose(x, xs, m)))) return k;
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return max_k + 1;
}

// 4. Near-optimal L0 on tiny targeted problems.
Outcome tiny_optimum() {
  std::size_t hits = 0, instances = 0;
  std::uint64_t s = 0;
  std::ostringstream misses;
  while (instances < 20 && s < 200) {
    const std::uint64_t seed = 3000 + s++;
    auto model =
        std::make_shared<NearestCentroidModel>(toy::make_centroid_family(family({3, 4, 4}, 3, 3, 0.4f, seed)));
    const auto pair = toy::make_pairs(*model, 1, true, seed * 7).front();
    const auto goal = AttackGoal::targeted(pair.source_label, *pair.target_label);
    const std::size_t opt = brute_force_min(pair.source, *pair.start, goal, *model, 5);
    if (opt > 5) continue;
    ++instances;
    ToyOracle oracle(model);
    EvoParams p;
    p.query_limit = 2000;
    p.mutation_rate = 0.01;
    p.rng_seed = seed;
    const auto r = run_sparse_evo(pair.source, *pair.start, goal, oracle, p);
    const std::size_t got = r.final_mask.popcount();
    if (r.success && got <= opt + 1) {
      ++hits;
    } else {
      misses << " seed" << seed << ":" << got << "vs" << opt;
    }
  }
  const bool ok = instances == 20 && hits * 10 >= instances * 9;
  return {ok, std::to_string(hits) + "/" + std::to_string(instances) + " within optimum+1" + misses.str()};
}

hs::AttackConfig evo_config(const std::string& name, double mutation_rate) {
  hs::AttackConfig a;
  a.name = name;
  a.kind = hs::AttackKind::sparse_evo;
  a.evo.mutation_rate = mutation_rate;
  return a;
}

hs::AttackConfig pw_config(const std::string& name, std::size_t np) {
  hs::AttackConfig a;
  a.name = name;
  a.kind = hs::AttackKind::pointwise;
  a.selections_per_query = np;
  return a;
}

struct Dataset {
  std::shared_ptr<NearestCentroidModel> model;
  std::vector<hs::EvalPair> pairs;
  OracleFactory factory;
};

Dataset dataset(Shape shape, std::size_t count, bool targeted, std::uint64_t seed) {
  Dataset d;
  d.model = std::make_shared<NearestCentroidModel>(toy::make_centroid_family(family(shape, 10, 16, 0.3f, seed)));
  d.pairs = toy::make_pairs(*d.model, count, targeted, seed + 1);
  auto m = d.model;
  d.factory = [m] { return std::make_unique<ToyOracle>(m); };
  return d;
}

std::vector<double> sparsities(const std::vector<hs::EvalRecord>& records, const std::string& attack,
                               std::uint64_t budget) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (r.attack == attack && r.budget == budget) out.push_back(r.sparsity);
  }
  return out;
}

// 5. SparseEvo against Pointwise on untargeted 32x32 toys.
Outcome versus_pointwise() {
  const auto d = dataset({3, 32, 32}, 50, false, 11);
  hs::EvalOptions opt;
  opt.budgets = {200, 500};
  opt.thresholds = {0.005, 0.008};
  opt.master_seed = 5;
  opt.workers = 4;
  const auto out = hs::run_evaluation(d.pairs, {evo_config("se", 0.04), pw_config("pw1", 1)}, opt, d.factory);
  if (!out.failures.empty()) return {false, std::to_string(out.failures.size()) + " failed cells"};
  const auto summary = hs::summarize(out.records, opt.thresholds);
  bool ok = true;
  std::ostringstream details;
  for (std::uint64_t b : opt.budgets) {
    const double se = median(sparsities(out.records, "se", b));
    const double pw = median(sparsities(out.records, "pw1", b));
    ok &= se < pw;
    details << fmt("T=%.0f median se %.4f", b, se) << fmt(" pw %.4f; ", pw, 0);
    const hs::GroupSummary *gs = nullptr, *gp = nullptr;
    for (const auto& g : summary) {
      if (g.budget != b) continue;
      (g.attack == "se" ? gs : gp) = &g;
    }
    for (std::size_t i = 0; i < opt.thresholds.size(); ++i) {
      ok &= gs->asr[i].rate >= gp->asr[i].rate;
      details << fmt("ASR<%.3f se %.2f", opt.thresholds[i], gs->asr[i].rate) << fmt(" pw %.2f; ", gp->asr[i].rate, 0);
    }
  }
  return {ok, details.str()};
}

// 6. Pointwise with 8 resets per query against 1.
Outcome pointwise_batches() {
  const auto d = dataset({3, 64, 64}, 20, true, 21);
  hs::EvalOptions opt;
  opt.budgets = {4000};
  opt.thresholds = {0.01};
  opt.master_seed = 6;
  opt.workers = 4;
  const auto out = hs::run_evaluation(d.pairs, {pw_config("pw1", 1), pw_config("pw8", 8)}, opt, d.factory);
  if (!out.failures.empty()) return {false, std::to_string(out.failures.size()) + " failed cells"};
  const double m1 = mean(sparsities(out.records, "pw1", 4000));
  const double m8 = mean(sparsities(out.records, "pw8", 4000));
  return {m8 < m1, fmt("mean sparsity pw8 %.4f vs pw1 %.4f", m8, m1)};
}

// 7. Recombination and mutation scheme sweeps.
Outcome scheme_sweeps() {
  const auto d = dataset({3, 32, 32}, 30, false, 31);
  hs::EvalOptions opt;
  opt.budgets = {500};
  opt.thresholds = {0.01};
  opt.master_seed = 7;
  opt.workers = 4;
  const auto base = evo_config("se", 0.01);
  const auto rec = hs::sweep(d.pairs, base, hs::SweepAxis::recombination_scheme, {"best_plus_two", "three_random"},
                             opt, d.factory);
  const auto mut = hs::sweep(d.pairs, base, hs::SweepAxis::mutation_scheme, {"ones", "mixed:0.8"}, opt, d.factory);
  const double bp2 = rec[0].summary.front().median;
  const double tr = rec[1].summary.front().median;
  const double ones = mut[0].summary.front().median;
  const double mixed = mut[1].summary.front().median;
  bool shared = true;
  for (std::size_t i = 0; i < rec[0].records.size(); ++i) {
    shared &= rec[0].records[i].seed == rec[1].records[i].seed && mut[0].records[i].seed == mut[1].records[i].seed;
  }
  return {bp2 < tr && ones <= mixed && shared,
          fmt("median best_plus_two %.4f vs three_random %.4f; ", bp2, tr) +
              fmt("ones %.4f vs mixed:0.8 %.4f; seeds shared: ", ones, mixed) + (shared ? "yes" : "no")};
}

// 8. Binary-search projection against a linear scan.
Outcome projection_search() {
  SplitMix64 gen(88);
  std::size_t mismatches = 0, over_budget = 0;
  const int n = 500;
  for (int t = 0; t < n; ++t) {
    const Shape shape{1 + gen.next() % 3, 1 + gen.next() % 16, 1 + gen.next() % 16};
    const auto x = random_image(shape, gen);
    const auto adv = perturb(x, 0.2 + 0.8 * gen.next_unit(), gen);
    const std::size_t big_n = differing_pixels(x, adv);
    if (big_n == 0) continue;
    std::function<Label(const ImageTensor&)> classify;
    if (t % 2 == 0) {
      const std::size_t need = gen.next() % (big_n + 1);
      classify = [x, need](const ImageTensor& img) { return Label{differing_pixels(x, img) >= need ? 1 : 0}; };
    } else {
      // Weights aligned with the perturbation, so each extra pixel raises the score.
      std::vector<double> w(shape.size());
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double diff = static_cast<double>(adv.data()[k]) - x.data()[k];
        w[k] = (diff > 0 ? 1.0 : -1.0) * (0.5 + gen.next_unit());
      }
      double full = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) full += w[k] * (adv.data()[k] - x.data()[k]);
      const double tau = full * gen.next_unit();
      classify = [x, w, tau](const ImageTensor& img) {
        double s = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * (img.data()[k] - x.data()[k]);
        return Label{s >= tau ? 1 : 0};
      };
    }
    const auto goal = AttackGoal::untargeted(Label{0});
    const auto order = projection_order(x, adv, ProjectionNorm::l1);
    std::size_t linear_k = big_n;
    for (std::size_t k = 0; k <= big_n; ++k) {
      if (goal.satisfied_by(classify(keep_top_k(x, adv, order, k)))) {
        linear_k = k;
        break;
      }
    }
    FunctionOracle oracle(2, classify);
    QueryBudget budget(1000);
    BudgetedOracle bo(oracle, budget);
    const auto r = l0_project_binary_search(x, adv, goal, bo, ProjectionNorm::l1);
    mismatches += r.k != linear_k;
    const auto bound = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(big_n)))) + 1;
    over_budget += r.probes > bound;
  }
  return {mismatches == 0 && over_budget == 0, std::to_string(n) + " instances, " + std::to_string(mismatches) +
                                                   " k mismatches, " + std::to_string(over_budget) +
                                                   " over the probe bound"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. Two CLI evaluations with the same master seed.
Outcome cli_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("sparsevo_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string cli = SPARSEVO_CLI;
  const std::string data = (dir / "data").string();
  std::ofstream(dir / "attacks.toml") << "[[attack]]\nname = \"se\"\nkind = \"sparse_evo\"\n\n"
                                         "[[attack]]\nname = \"pw\"\nkind = \"pointwise\"\nnp = 4\n";
  auto sh = [](const std::string& cmd) { return std::system((cmd + " 2>/dev/null").c_str()); };
  if (sh(cli + " toy make --out " + data + " --pairs 6 --seed 4") != 0) return {false, "toy make failed"};
  const std::string eval = cli + " eval --oracle toy:centroid:" + data + "/centroids.txt --pairs " + data +
                           "/pairs.json --attacks " + (dir / "attacks.toml").string() +
                           " --budgets 100,300 --thresholds 0.01,0.05 --master-seed 99 --workers 3 --out ";
  if (sh(eval + (dir / "a").string()) != 0 || sh(eval + (dir / "b").string()) != 0) {
    return {false, "eval failed"};
  }
  const auto a = slurp(dir / "a" / "records.csv");
  const auto b = slurp(dir / "b" / "records.csv");
  const auto lines = std::count(a.begin(), a.end(), '\n');
  std::filesystem::remove_all(dir);
  return {!a.empty() && a == b && lines == 25,
          std::to_string(lines - 1) + " records, byte-identical: " + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  run(1, "mask-algebra", 5, algebra);
  run(2, "trace-monotone", 30, trace_monotone);
  run(3, "query-accounting", 30, accounting);
  run(4, "tiny-optimum", 120, tiny_optimum);
  run(5, "sparse-evo-vs-pointwise", 300, versus_pointwise);
  run(6, "pointwise-batch-resets", 300, pointwise_batches);
  run(7, "scheme-sweeps", 300, scheme_sweeps);
  run(8, "projection-binary-search", 10, projection_search);
  run(9, "cli-determinism", 60, cli_determinism);
  std::cout << (failures == 0 ? "ALL PASS" : "SOME FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
