#include "sparsevo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

#include "sparsevo/errors.hpp"
#include "sparsevo/image_io.hpp"
#include "sparsevo/rng.hpp"

namespace sparsevo::harness {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string threshold_column(double theta) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "success_lt_%g", theta);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T toml_get(const toml::table& table, std::string_view key, T fallback) {
  if (auto v = table[key].value<T>()) return *v;
  if (table.contains(key)) throw ContractError("attacks: key '" + std::string(key) + "' has the wrong type");
  return fallback;
}

AttackTrace shift_trace(const AttackTrace& trace, std::uint64_t offset) {
  AttackTrace out;
  for (const auto& e : trace.entries()) out.record(e.query + offset, e.best_fitness, e.best_sparsity);
  return out;
}

}  // namespace

std::vector<EvalPair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open pairs file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("pairs file: ") + e.what());
  }
  if (!doc.is_array()) throw ContractError("pairs file must hold a JSON array");
  const auto base = path.parent_path();
  std::vector<EvalPair> pairs;
  try {
    for (const auto& entry : doc) {
      EvalPair pair;
      pair.id = entry.at("id").is_string() ? entry.at("id").get<std::string>() : entry.at("id").dump();
      pair.source = io::read_image(base / entry.at("source_path").get<std::string>());
      pair.source_label = Label{entry.at("source_label").get<int>()};
      const bool has_start = entry.contains("start_path") && !entry["start_path"].is_null();
      const bool has_target = entry.contains("target_label") && !entry["target_label"].is_null();
      if (has_start != has_target) throw ContractError("pair " + pair.id + ": start_path and target_label go together");
      if (has_start) {
        pair.start = io::read_image(base / entry["start_path"].get<std::string>());
        pair.target_label = Label{entry["target_label"].get<int>()};
        if (pair.start->shape() != pair.source.shape()) throw ContractError("pair " + pair.id + ": shape mismatch");
      }
      pairs.push_back(std::move(pair));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("pairs file: ") + e.what());
  }
  return pairs;
}

std::vector<AttackConfig> parse_attacks(std::string_view toml_text) {
  toml::table doc;
  try {
    doc = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw ContractError(std::string("attacks: ") + std::string(e.description()));
  }
  const auto* list = doc["attack"].as_array();
  if (!list || list->empty()) throw ContractError("attacks: expected one or more [[attack]] tables");
  std::vector<AttackConfig> out;
  for (const auto& node : *list) {
    const auto* t = node.as_table();
    if (!t) throw ContractError("attacks: [[attack]] entries must be tables");
    AttackConfig a;
    a.name = toml_get<std::string>(*t, "name", "");
    if (a.name.empty()) throw ContractError("attacks: every attack needs a name");
    const auto kind = toml_get<std::string>(*t, "kind", "sparse_evo");
    if (kind == "sparse_evo" || kind == "sparse-evo") {
      a.kind = AttackKind::sparse_evo;
    } else if (kind == "pointwise") {
      a.kind = AttackKind::pointwise;
    } else {
      throw ContractError("attacks: unknown kind '" + kind + "'");
    }
    a.evo.population_size = static_cast<std::size_t>(toml_get<std::int64_t>(*t, "pop_size", 10));
    a.evo.init_rate = toml_get<double>(*t, "init_rate", 0.004);
    a.evo.mutation_rate = toml_get<double>(*t, "mutation_rate", 0.04);
    a.evo.mutation = MutationScheme::parse(toml_get<std::string>(*t, "mutation_scheme", "ones"));
    a.evo.recombination = parse_recombination(toml_get<std::string>(*t, "recombination", "best_plus_two"));
    a.evo.mutation_floor = static_cast<int>(toml_get<std::int64_t>(*t, "mutation_floor", 1));
    a.evo.free_init = toml_get<bool>(*t, "free_init", false);
    a.selections_per_query = static_cast<std::size_t>(toml_get<std::int64_t>(*t, "np", 1));
    if (const auto* d = (*t)["sp_densities"].as_array()) {
      a.schedule.densities.clear();
      for (const auto& v : *d) {
        const auto x = v.value<double>();
        if (!x) throw ContractError("attacks: sp_densities must be numbers");
        a.schedule.densities.push_back(*x);
      }
    }
    a.schedule.repeats = static_cast<std::size_t>(toml_get<std::int64_t>(*t, "sp_repeats", 10));
    a.schedule.validate();
    EvoParams check = a.evo;
    check.free_init = true;
    check.validate();
    if (a.selections_per_query < 1) throw ContractError("attacks: np must be >= 1");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<AttackConfig> load_attacks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open attacks file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_attacks(buf.str());
}

std::uint64_t cell_seed(std::uint64_t master_seed, const std::string& pair_id, const std::string& attack,
                        std::uint64_t budget) {
  return hash_bytes(std::to_string(master_seed) + "|" + pair_id + "|" + attack + "|" + std::to_string(budget));
}

std::uint64_t init_seed(std::uint64_t master_seed, const std::string& pair_id) {
  return hash_bytes(std::to_string(master_seed) + "|" + pair_id + "|init");
}

EvalRecord run_cell(const EvalPair& pair, const AttackConfig& attack, std::uint64_t budget,
                    std::uint64_t master_seed, DecisionOracle& oracle, AttackTrace* trace) {
  const auto started = std::chrono::steady_clock::now();
  EvalRecord rec;
  rec.pair_id = pair.id;
  rec.attack = attack.name;
  rec.budget = budget;
  rec.seed = cell_seed(master_seed, pair.id, attack.seed_key(), budget);

  ++rec.setup_queries;
  if (oracle.predict(pair.source) != pair.source_label) {
    throw ContractError("pair " + pair.id + ": source image is not classified as its label");
  }

  QueryBudget qb(budget);
  ImageTensor start;
  AttackGoal goal = AttackGoal::untargeted(pair.source_label);
  std::uint64_t init_queries = 0;
  if (pair.targeted()) {
    goal = AttackGoal::targeted(pair.source_label, *pair.target_label);
    ++rec.setup_queries;
    if (oracle.predict(*pair.start) != *pair.target_label) {
      throw ContractError("pair " + pair.id + ": start image is not classified as the target");
    }
    start = *pair.start;
  } else {
    Rng rng(init_seed(master_seed, pair.id));
    BudgetedOracle charged(oracle, qb);
    try {
      auto init = salt_pepper_init(pair.source, pair.source_label, charged, attack.schedule, rng);
      start = std::move(init.image);
      init_queries = init.queries;
    } catch (const InitializationFailed&) {
    } catch (const BudgetExhausted&) {
    }
    if (start.data().empty()) {
      rec.sparsity = 1.0;
      rec.attack_success = false;
      rec.queries_used = qb.used();
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      return rec;
    }
  }

  AttackResult result;
  if (attack.kind == AttackKind::sparse_evo) {
    EvoParams params = attack.evo;
    params.rng_seed = rec.seed;
    params.verify_start = false;
    params.query_limit = budget;
    result = run_sparse_evo(pair.source, start, goal, oracle, params, qb);
  } else {
    PointwiseParams params;
    params.selections_per_query = attack.selections_per_query;
    params.query_limit = budget;
    params.rng_seed = rec.seed;
    params.verify_start = false;
    result = pointwise_attack(pair.source, start, goal, oracle, params, qb);
  }
  // The starting point was verified above (targeted) or found adversarial by
  // salt-and-pepper, so the returned image is feasible even with zero accepted steps.
  rec.attack_success = true;
  rec.sparsity = result.sparsity;
  rec.queries_used = qb.used();
  if (trace) *trace = shift_trace(result.trace, init_queries);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rec;
}

EvalOutput run_evaluation(const std::vector<EvalPair>& pairs, const std::vector<AttackConfig>& attacks,
                          const EvalOptions& options, const OracleFactory& factory) {
  if (pairs.empty()) throw ContractError("evaluation needs at least one pair");
  if (attacks.empty()) throw ContractError("evaluation needs at least one attack");
  if (options.budgets.empty()) throw ContractError("evaluation needs at least one budget");
  if (options.thresholds.empty()) throw ContractError("evaluation needs at least one threshold");

  struct Cell {
    std::size_t pair, attack, budget;
  };
  std::vector<Cell> cells;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    for (std::size_t a = 0; a < attacks.size(); ++a) {
      for (std::size_t b = 0; b < options.budgets.size(); ++b) cells.push_back({p, a, b});
    }
  }

  std::vector<std::optional<EvalRecord>> records(cells.size());
  std::vector<std::optional<CellFailure>> failures(cells.size());
  const int workers = static_cast<int>(std::max<std::size_t>(1, options.workers));
  const auto n = static_cast<std::ptrdiff_t>(cells.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Cell& cell = cells[i];
    const EvalPair& pair = pairs[cell.pair];
    const AttackConfig& attack = attacks[cell.attack];
    const std::uint64_t budget = options.budgets[cell.budget];
    try {
      auto oracle = factory();
      AttackTrace trace;
      records[i] = run_cell(pair, attack, budget, options.master_seed, *oracle,
                            options.trace_root ? &trace : nullptr);
      if (options.trace_root) {
        const auto dir = *options.trace_root / attack.name / pair.id / std::to_string(budget);
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / "trace.csv");
        trace.write_csv(out);
      }
    } catch (const std::exception& e) {
      failures[i] = CellFailure{pair.id, attack.name, budget, e.what()};
    }
  }

  EvalOutput output;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (records[i]) output.records.push_back(std::move(*records[i]));
    if (failures[i]) output.failures.push_back(std::move(*failures[i]));
  }
  return output;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("percentile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("percentile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * static_cast<double>(values.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size()))) - 1;
  return values[idx];
}

std::vector<GroupSummary> summarize(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds) {
  std::map<std::pair<std::string, std::uint64_t>, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) groups[{r.attack, r.budget}].push_back(&r);
  std::vector<GroupSummary> out;
  for (const auto& [key, group] : groups) {
    GroupSummary s;
    s.attack = key.first;
    s.budget = key.second;
    s.count = group.size();
    std::vector<double> sparsity;
    for (const auto* r : group) sparsity.push_back(r->sparsity);
    s.median = percentile(sparsity, 0.5);
    s.q1 = percentile(sparsity, 0.25);
    s.q3 = percentile(sparsity, 0.75);
    for (double theta : thresholds) {
      const auto ok = std::count_if(group.begin(), group.end(), [&](const EvalRecord* r) { return r->succeeds_below(theta); });
      s.asr.push_back({theta, static_cast<double>(ok) / static_cast<double>(group.size())});
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_records_csv(std::ostream& out, const std::vector<EvalRecord>& records,
                       const std::vector<double>& thresholds) {
  out << "pair_id,attack,budget,sparsity,attack_success,queries_used,setup_queries,seed";
  for (double t : thresholds) out << ',' << threshold_column(t);
  out << '\n';
  for (const auto& r : records) {
    out << r.pair_id << ',' << r.attack << ',' << r.budget << ',' << format_double(r.sparsity) << ','
        << (r.attack_success ? 1 : 0) << ',' << r.queries_used << ',' << r.setup_queries << ',' << r.seed;
    for (double t : thresholds) out << ',' << (r.succeeds_below(t) ? 1 : 0);
    out << '\n';
  }
}

std::vector<EvalRecord> read_records_csv(std::istream& in, std::vector<double>* thresholds) {
  std::string line;
  if (!std::getline(in, line)) throw ContractError("records: empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 8 || header[0] != "pair_id") throw ContractError("records: unexpected header");
  if (thresholds) {
    thresholds->clear();
    for (std::size_t i = 8; i < header.size(); ++i) {
      thresholds->push_back(std::stod(header[i].substr(std::string("success_lt_").size())));
    }
  }
  std::vector<EvalRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 8) throw ContractError("records: short row");
    EvalRecord r;
    r.pair_id = f[0];
    r.attack = f[1];
    r.budget = std::stoull(f[2]);
    r.sparsity = std::stod(f[3]);
    r.attack_success = f[4] == "1";
    r.queries_used = std::stoull(f[5]);
    r.setup_queries = std::stoull(f[6]);
    r.seed = std::stoull(f[7]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_timings_csv(std::ostream& out, const std::vector<EvalRecord>& records) {
  out << "pair_id,attack,budget,wall_seconds\n";
  for (const auto& r : records) {
    out << r.pair_id << ',' << r.attack << ',' << r.budget << ',' << format_double(r.wall_seconds) << '\n';
  }
}

void write_failures_csv(std::ostream& out, const std::vector<CellFailure>& failures) {
  out << "pair_id,attack,budget,message\n";
  for (const auto& f : failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << f.pair_id << ',' << f.attack << ',' << f.budget << ',' << msg << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<GroupSummary>& summary) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& s : summary) {
    nlohmann::ordered_json g;
    g["attack"] = s.attack;
    g["budget"] = s.budget;
    g["count"] = s.count;
    g["median"] = s.median;
    g["q1"] = s.q1;
    g["q3"] = s.q3;
    nlohmann::ordered_json asr = nlohmann::ordered_json::array();
    for (const auto& p : s.asr) asr.push_back({{"threshold", p.threshold}, {"rate", p.rate}});
    g["asr"] = std::move(asr);
    doc.push_back(std::move(g));
  }
  out << doc.dump(2) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<GroupSummary>& summary) {
  out << "attack,budget,count,median,q1,q3";
  if (!summary.empty()) {
    for (const auto& p : summary.front().asr) out << ",asr_lt_" << format_double(p.threshold);
  }
  out << '\n';
  for (const auto& s : summary) {
    out << s.attack << ',' << s.budget << ',' << s.count << ',' << format_double(s.median) << ','
        << format_double(s.q1) << ',' << format_double(s.q3);
    for (const auto& p : s.asr) out << ',' << format_double(p.rate);
    out << '\n';
  }
}

void write_evaluation(const std::filesystem::path& dir, const EvalOutput& output,
                      const std::vector<double>& thresholds) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "records.csv");
    write_records_csv(out, output.records, thresholds);
  }
  {
    std::ofstream out(dir / "timings.csv");
    write_timings_csv(out, output.records);
  }
  {
    std::ofstream out(dir / "failures.csv");
    write_failures_csv(out, output.failures);
  }
  std::ofstream out(dir / "summary.json");
  write_summary_json(out, summarize(output.records, thresholds));
}

SweepAxis parse_sweep_axis(const std::string& text) {
  if (text == "population_size") return SweepAxis::population_size;
  if (text == "mutation_rate") return SweepAxis::mutation_rate;
  if (text == "recombination_scheme") return SweepAxis::recombination_scheme;
  if (text == "mutation_scheme") return SweepAxis::mutation_scheme;
  throw ContractError("unknown sweep axis '" + text + "'");
}

std::vector<SweepRow> sweep(const std::vector<EvalPair>& pairs, const AttackConfig& base, SweepAxis axis,
                            const std::vector<std::string>& values, const EvalOptions& options,
                            const OracleFactory& factory) {
  if (base.kind != AttackKind::sparse_evo) throw ContractError("sweeps vary SparseEvo parameters");
  std::vector<SweepRow> rows;
  for (const auto& value : values) {
    AttackConfig variant = base;
    variant.seed_name = base.seed_key();
    switch (axis) {
      case SweepAxis::population_size:
        variant.evo.population_size = std::stoul(value);
        break;
      case SweepAxis::mutation_rate:
        variant.evo.mutation_rate = std::stod(value);
        break;
      case SweepAxis::recombination_scheme:
        variant.evo.recombination = parse_recombination(value);
        break;
      case SweepAxis::mutation_scheme:
        variant.evo.mutation = MutationScheme::parse(value);
        break;
    }
    EvoParams check = variant.evo;
    check.free_init = true;
    check.validate();
    variant.name = base.name + "[" + value + "]";
    auto output = run_evaluation(pairs, {variant}, options, factory);
    SweepRow row;
    row.value = value;
    row.summary = summarize(output.records, options.thresholds);
    row.records = std::move(output.records);
    row.failures = std::move(output.failures);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "value,budget,count,median,q1,q3";
  if (!rows.empty() && !rows.front().summary.empty()) {
    for (const auto& p : rows.front().summary.front().asr) out << ",asr_lt_" << format_double(p.threshold);
  }
  out << '\n';
  for (const auto& row : rows) {
    for (const auto& s : row.summary) {
      out << row.value << ',' << s.budget << ',' << s.count << ',' << format_double(s.median) << ','
          << format_double(s.q1) << ',' << format_double(s.q3);
      for (const auto& p : s.asr) out << ',' << format_double(p.rate);
      out << '\n';
    }
  }
}

}  // namespace sparsevo::harness
