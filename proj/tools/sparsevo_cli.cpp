// Command-line front end: single attacks, evaluation batches, sweeps, reports
// and toy dataset generation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsevo/baselines.hpp"
#include "sparsevo/errors.hpp"
#include "sparsevo/harness.hpp"
#include "sparsevo/image_io.hpp"
#include "sparsevo/sparse_evo.hpp"
#include "sparsevo/toy_data.hpp"
#include "sparsevo/toy_models.hpp"

namespace sv = sparsevo;
namespace hs = sparsevo::harness;
using nlohmann::ordered_json;

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream field(item);
    T value{};
    if (!(field >> value) || !field.eof()) throw sv::ContractError(std::string("bad ") + what + " list: " + text);
    out.push_back(value);
  }
  if (out.empty()) throw sv::ContractError(std::string("empty ") + what + " list");
  return out;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(item);
  return out;
}

sv::Shape parse_shape(const std::string& text) {
  sv::Shape shape;
  char x1 = 0, x2 = 0;
  std::istringstream in(text);
  if (!(in >> shape.channels >> x1 >> shape.width >> x2 >> shape.height) || x1 != 'x' || x2 != 'x' ||
      shape.size() == 0) {
    throw sv::ContractError("shape must look like 3x32x32");
  }
  return shape;
}

struct OracleOpts {
  std::string selector;
  int classes = 10;
};

void add_oracle_opts(CLI::App* cmd, OracleOpts& o) {
  cmd->add_option("--oracle", o.selector, "toy:linear:<seed> | toy:mlp2:<seed> | toy:centroid:<path> | "
                                          "exec:<command> | tcp:<host>:<port>")
      ->required();
  cmd->add_option("--classes", o.classes, "Class count for seeded toy models")->capture_default_str();
}

std::unique_ptr<sv::DecisionOracle> make_oracle(const OracleOpts& o, sv::Shape shape) {
  return sv::parse_oracle_selector(o.selector, shape, o.classes)();
}

struct AttackOpts {
  OracleOpts oracle;
  std::string mode = "untargeted";
  std::string source, start, trace, out;
  std::optional<int> target_label;
  std::uint64_t budget = 1000;
  std::uint64_t seed = 0;
  // sparse-evo
  std::size_t pop_size = 10;
  double init_rate = 0.004;
  double mutation_rate = 0.04;
  std::string mutation_scheme = "ones";
  std::string recombination = "best_plus_two";
  int mutation_floor = 1;
  bool free_init = false;
  // pointwise
  std::size_t np = 1;
};

void add_shared_attack_opts(CLI::App* cmd, AttackOpts& a) {
  add_oracle_opts(cmd, a.oracle);
  cmd->add_option("--mode", a.mode)->check(CLI::IsMember({"targeted", "untargeted"}))->capture_default_str();
  cmd->add_option("--source", a.source, "Source image x")->required();
  cmd->add_option("--start", a.start, "Starting image x' (untargeted: salt-and-pepper when omitted)");
  cmd->add_option("--target-label", a.target_label);
  cmd->add_option("--budget", a.budget, "Query limit T")->capture_default_str();
  cmd->add_option("--seed", a.seed)->capture_default_str();
  cmd->add_option("--trace", a.trace, "Trace CSV path");
  cmd->add_option("--out", a.out, "Adversarial image path (.bin for the binary container)");
}

void write_trace(const std::string& path, const sv::AttackTrace& trace) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw sv::ContractError("cannot write " + path);
  trace.write_csv(out);
}

int run_attack(const AttackOpts& a, bool sparse_evo) {
  const auto source = sv::io::read_image(a.source);
  auto oracle = make_oracle(a.oracle, source.shape());
  std::uint64_t setup = 1;
  const sv::Label source_label = oracle->predict(source);

  sv::QueryBudget budget(a.budget);
  std::optional<sv::AttackGoal> goal;
  sv::ImageTensor start;
  std::uint64_t init_queries = 0;
  if (a.mode == "targeted") {
    if (!a.target_label || a.start.empty()) throw sv::ContractError("targeted mode needs --start and --target-label");
    goal = sv::AttackGoal::targeted(source_label, sv::Label{*a.target_label});
    start = sv::io::read_image(a.start);
  } else {
    goal = sv::AttackGoal::untargeted(source_label);
    if (!a.start.empty()) {
      start = sv::io::read_image(a.start);
    } else {
      sv::Rng rng(a.seed ^ 0x5a17ULL);
      sv::BudgetedOracle charged(*oracle, budget);
      auto init = sv::salt_pepper_init(source, source_label, charged, {}, rng);
      init_queries = init.queries;
      start = std::move(init.image);
    }
  }
  if (!a.start.empty()) setup += sv::verify_start(start, *goal, *oracle);

  sv::AttackResult result;
  if (sparse_evo) {
    sv::EvoParams p;
    p.population_size = a.pop_size;
    p.init_rate = a.init_rate;
    p.mutation_rate = a.mutation_rate;
    p.query_limit = a.budget;
    p.mutation = sv::MutationScheme::parse(a.mutation_scheme);
    p.recombination = sv::parse_recombination(a.recombination);
    p.mutation_floor = a.mutation_floor;
    p.free_init = a.free_init;
    p.verify_start = false;
    p.rng_seed = a.seed;
    p.validate();
    result = sv::run_sparse_evo(source, start, *goal, *oracle, p, budget);
  } else {
    sv::PointwiseParams p;
    p.selections_per_query = a.np;
    p.query_limit = a.budget;
    p.rng_seed = a.seed;
    p.verify_start = false;
    result = sv::pointwise_attack(source, start, *goal, *oracle, p, budget);
  }
  write_trace(a.trace, result.trace);
  if (!a.out.empty()) sv::io::write_image(a.out, result.adversarial);

  ordered_json j;
  j["source_label"] = source_label.index;
  j["final_label"] = oracle->predict(result.adversarial).index;
  j["sparsity"] = result.sparsity;
  j["differing_pixels"] = result.final_mask.popcount();
  j["l2"] = sv::l2_distance(source, result.adversarial);
  j["queries_used"] = budget.used();
  j["init_queries"] = init_queries;
  j["setup_queries"] = setup;
  std::cout << j.dump() << '\n';
  return 0;
}

struct EvalOpts {
  OracleOpts oracle;
  std::string pairs, attacks, out;
  std::string budgets = "200,500,2000";
  std::string thresholds = "0.001,0.002,0.004,0.01,0.02,0.04";
  std::size_t workers = 1;
  std::uint64_t master_seed = 0;
  bool no_traces = false;
  // sweep
  std::string axis, values, base;
};

void add_eval_opts(CLI::App* cmd, EvalOpts& e) {
  add_oracle_opts(cmd, e.oracle);
  cmd->add_option("--pairs", e.pairs, "pairs.json")->required();
  cmd->add_option("--attacks", e.attacks, "attacks.toml")->required();
  cmd->add_option("--budgets", e.budgets)->capture_default_str();
  cmd->add_option("--thresholds", e.thresholds)->capture_default_str();
  cmd->add_option("--workers", e.workers)->capture_default_str();
  cmd->add_option("--master-seed", e.master_seed)->capture_default_str();
  cmd->add_option("--out", e.out, "Output directory")->required();
  cmd->add_flag("--no-traces", e.no_traces, "Skip per-cell trace files");
}

hs::EvalOptions eval_options(const EvalOpts& e) {
  hs::EvalOptions o;
  o.budgets = parse_list<std::uint64_t>(e.budgets, "budget");
  o.thresholds = parse_list<double>(e.thresholds, "threshold");
  o.workers = e.workers;
  o.master_seed = e.master_seed;
  if (!e.no_traces) o.trace_root = std::filesystem::path(e.out);
  return o;
}

void report_failures(const std::vector<hs::CellFailure>& failures) {
  for (const auto& f : failures) {
    std::cerr << "cell failed: " << f.pair_id << " / " << f.attack << " / " << f.budget << ": " << f.message << '\n';
  }
}

int run_eval(const EvalOpts& e) {
  const auto pairs = hs::load_pairs(e.pairs);
  const auto attacks = hs::load_attacks(e.attacks);
  const auto options = eval_options(e);
  const auto factory = sv::parse_oracle_selector(e.oracle.selector, pairs.front().source.shape(), e.oracle.classes);
  const auto output = hs::run_evaluation(pairs, attacks, options, factory);
  hs::write_evaluation(e.out, output, options.thresholds);
  report_failures(output.failures);
  std::cerr << output.records.size() << " records, " << output.failures.size() << " failed cells\n";
  return output.failures.empty() ? 0 : 3;
}

int run_sweep(const EvalOpts& e) {
  const auto pairs = hs::load_pairs(e.pairs);
  const auto attacks = hs::load_attacks(e.attacks);
  const hs::AttackConfig* base = &attacks.front();
  if (!e.base.empty()) {
    base = nullptr;
    for (const auto& a : attacks) {
      if (a.name == e.base) base = &a;
    }
    if (!base) throw sv::ContractError("no attack named '" + e.base + "'");
  }
  auto options = eval_options(e);
  options.trace_root.reset();
  const auto factory = sv::parse_oracle_selector(e.oracle.selector, pairs.front().source.shape(), e.oracle.classes);
  const auto rows = hs::sweep(pairs, *base, hs::parse_sweep_axis(e.axis), split_values(e.values), options, factory);
  std::filesystem::create_directories(e.out);
  std::ofstream sweep_out(std::filesystem::path(e.out) / "sweep.csv");
  hs::write_sweep_csv(sweep_out, rows);
  std::vector<hs::EvalRecord> all;
  for (const auto& row : rows) all.insert(all.end(), row.records.begin(), row.records.end());
  std::ofstream records_out(std::filesystem::path(e.out) / "records.csv");
  hs::write_records_csv(records_out, all, options.thresholds);
  hs::write_sweep_csv(std::cout, rows);
  std::size_t failed = 0;
  for (const auto& row : rows) {
    for (const auto& f : row.failures) {
      std::cerr << "cell failed: " << f.pair_id << " / " << f.attack << " / " << f.budget << ": " << f.message << '\n';
    }
    failed += row.failures.size();
  }
  return failed == 0 ? 0 : 3;
}

int run_report(const std::string& dir, const std::string& format) {
  std::ifstream in(std::filesystem::path(dir) / "records.csv");
  if (!in) throw sv::ContractError("no records.csv in " + dir);
  std::vector<double> thresholds;
  const auto records = hs::read_records_csv(in, &thresholds);
  const auto summary = hs::summarize(records, thresholds);
  if (format == "json") {
    hs::write_summary_json(std::cout, summary);
  } else {
    hs::write_summary_csv(std::cout, summary);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-based sparse adversarial attacks"};
  app.require_subcommand(1);

  // attack
  auto* attack = app.add_subcommand("attack", "Run one attack");
  attack->require_subcommand(1);
  AttackOpts evo_opts, pw_opts;
  auto* evo = attack->add_subcommand("sparse-evo", "Evolutionary sparse attack");
  add_shared_attack_opts(evo, evo_opts);
  evo->add_option("--pop-size", evo_opts.pop_size)->capture_default_str();
  evo->add_option("--init-rate", evo_opts.init_rate)->capture_default_str();
  evo->add_option("--mutation-rate", evo_opts.mutation_rate)->capture_default_str();
  evo->add_option("--mutation-scheme", evo_opts.mutation_scheme, "ones | mixed:<beta>")->capture_default_str();
  evo->add_option("--recombination", evo_opts.recombination, "best_plus_two | three_random")->capture_default_str();
  evo->add_option("--mutation-floor", evo_opts.mutation_floor)->check(CLI::IsMember({0, 1}))->capture_default_str();
  evo->add_flag("--free-init", evo_opts.free_init, "Do not charge initialization queries to the budget");
  auto* pw = attack->add_subcommand("pointwise", "Greedy coordinate reset baseline");
  add_shared_attack_opts(pw, pw_opts);
  pw->add_option("--np", pw_opts.np, "Coordinates reset per query")->capture_default_str();

  // init salt-pepper
  auto* init = app.add_subcommand("init", "Starting points");
  init->require_subcommand(1);
  auto* sp = init->add_subcommand("salt-pepper", "Untargeted salt-and-pepper start");
  OracleOpts sp_oracle;
  std::string sp_source, sp_out, sp_densities;
  std::uint64_t sp_budget = 1000, sp_seed = 0;
  std::size_t sp_repeats = 10;
  add_oracle_opts(sp, sp_oracle);
  sp->add_option("--source", sp_source)->required();
  sp->add_option("--out", sp_out)->required();
  sp->add_option("--budget", sp_budget)->capture_default_str();
  sp->add_option("--seed", sp_seed)->capture_default_str();
  sp->add_option("--densities", sp_densities, "Comma-separated increasing densities");
  sp->add_option("--repeats", sp_repeats)->capture_default_str();

  // project l0
  auto* project = app.add_subcommand("project", "Projections");
  project->require_subcommand(1);
  auto* l0 = project->add_subcommand("l0", "Binary-search L0 projection of an adversarial image");
  OracleOpts pj_oracle;
  std::string pj_source, pj_adv, pj_out, pj_norm = "l1", pj_mode = "untargeted";
  std::optional<int> pj_target;
  std::uint64_t pj_budget = 1000;
  add_oracle_opts(l0, pj_oracle);
  l0->add_option("--source", pj_source)->required();
  l0->add_option("--adv", pj_adv)->required();
  l0->add_option("--out", pj_out);
  l0->add_option("--proj-norm", pj_norm)->check(CLI::IsMember({"l1", "l2"}))->capture_default_str();
  l0->add_option("--mode", pj_mode)->check(CLI::IsMember({"targeted", "untargeted"}))->capture_default_str();
  l0->add_option("--target-label", pj_target);
  l0->add_option("--budget", pj_budget)->capture_default_str();

  // eval / sweep / report
  EvalOpts eval_opts, sweep_opts;
  auto* eval = app.add_subcommand("eval", "Evaluate attacks over pairs and budgets");
  add_eval_opts(eval, eval_opts);
  auto* sweep = app.add_subcommand("sweep", "Vary one SparseEvo parameter");
  add_eval_opts(sweep, sweep_opts);
  sweep->add_option("--axis", sweep_opts.axis, "population_size | mutation_rate | recombination_scheme | mutation_scheme")
      ->required();
  sweep->add_option("--values", sweep_opts.values)->required();
  sweep->add_option("--base", sweep_opts.base, "Attack to vary (default: the first one)");
  auto* report = app.add_subcommand("report", "Summarize an evaluation directory");
  std::string report_in, report_format = "csv";
  report->add_option("--in", report_in)->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  // toy make
  auto* toy = app.add_subcommand("toy", "Toy datasets");
  toy->require_subcommand(1);
  auto* make = toy->add_subcommand("make", "Write a nearest-centroid model and evaluation pairs");
  sv::toy::FamilyParams family;
  std::string toy_out, toy_shape = "3x32x32";
  std::size_t toy_pairs = 20;
  bool toy_targeted = false;
  make->add_option("--out", toy_out)->required();
  make->add_option("--shape", toy_shape)->capture_default_str();
  make->add_option("--classes", family.num_classes)->capture_default_str();
  make->add_option("--salient", family.salient_pixels)->capture_default_str();
  make->add_option("--amplitude", family.amplitude)->capture_default_str();
  make->add_option("--seed", family.seed)->capture_default_str();
  make->add_option("--pairs", toy_pairs)->capture_default_str();
  make->add_flag("--targeted", toy_targeted);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*evo) return run_attack(evo_opts, true);
    if (*pw) return run_attack(pw_opts, false);
    if (*sp) {
      const auto source = sv::io::read_image(sp_source);
      auto oracle = make_oracle(sp_oracle, source.shape());
      const sv::Label label = oracle->predict(source);
      sv::SaltPepperSchedule schedule;
      if (!sp_densities.empty()) schedule.densities = parse_list<double>(sp_densities, "density");
      schedule.repeats = sp_repeats;
      sv::QueryBudget budget(sp_budget);
      sv::BudgetedOracle charged(*oracle, budget);
      sv::Rng rng(sp_seed);
      const auto result = sv::salt_pepper_init(source, label, charged, schedule, rng);
      sv::io::write_image(sp_out, result.image);
      ordered_json j{{"density", result.density}, {"queries", result.queries}};
      std::cout << j.dump() << '\n';
      return 0;
    }
    if (*l0) {
      const auto source = sv::io::read_image(pj_source);
      const auto adv = sv::io::read_image(pj_adv);
      auto oracle = make_oracle(pj_oracle, source.shape());
      const sv::Label label = oracle->predict(source);
      sv::AttackGoal goal = sv::AttackGoal::untargeted(label);
      if (pj_mode == "targeted") {
        if (!pj_target) throw sv::ContractError("targeted projection needs --target-label");
        goal = sv::AttackGoal::targeted(label, sv::Label{*pj_target});
      }
      sv::verify_start(adv, goal, *oracle);
      sv::QueryBudget budget(pj_budget);
      sv::BudgetedOracle charged(*oracle, budget);
      const auto result = sv::l0_project_binary_search(source, adv, goal, charged, sv::parse_projection_norm(pj_norm));
      if (!pj_out.empty()) sv::io::write_image(pj_out, result.projected);
      ordered_json j{{"k", result.k},
                     {"probes", result.probes},
                     {"sparsity", sv::pixel_sparsity(source, result.projected)},
                     {"budget_exhausted", result.budget_exhausted}};
      std::cout << j.dump() << '\n';
      return 0;
    }
    if (*eval) return run_eval(eval_opts);
    if (*sweep) return run_sweep(sweep_opts);
    if (*report) return run_report(report_in, report_format);
    if (*make) {
      family.shape = parse_shape(toy_shape);
      const auto model = sv::toy::make_centroid_family(family);
      const auto pairs = sv::toy::make_pairs(model, toy_pairs, toy_targeted, family.seed + 1);
      sv::toy::write_dataset(toy_out, model, pairs);
      std::cerr << "wrote " << pairs.size() << " pairs to " << toy_out << '\n';
      return 0;
    }
  } catch (const sv::TransportError& e) {
    std::cerr << "transport error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
