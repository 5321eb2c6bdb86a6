#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sparsevo/baselines.hpp"
#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"
#include "sparsevo/sparse_evo.hpp"

namespace sparsevo::harness {

/// Targeted when `start` and `target_label` are present, untargeted otherwise
/// (the start then comes from salt-and-pepper noise).
struct EvalPair {
  std::string id;
  ImageTensor source;
  Label source_label;
  std::optional<ImageTensor> start;
  std::optional<Label> target_label;

  bool targeted() const { return target_label.has_value(); }
};

/// pairs.json: [{id, source_path, source_label, start_path?, target_label?}],
/// paths relative to the JSON file.
std::vector<EvalPair> load_pairs(const std::filesystem::path& path);

enum class AttackKind { sparse_evo, pointwise };

struct AttackConfig {
  std::string name;
  AttackKind kind = AttackKind::sparse_evo;
  /// Seeds derive from this name; sweeps keep it fixed across variants.
  std::string seed_name;
  EvoParams evo;
  std::size_t selections_per_query = 1;
  SaltPepperSchedule schedule;

  const std::string& seed_key() const { return seed_name.empty() ? name : seed_name; }
};

/// attacks.toml: one [[attack]] table per attack with `name`, `kind`
/// ("sparse_evo" | "pointwise") and optional keys pop_size, init_rate,
/// mutation_rate, mutation_scheme, recombination, mutation_floor, free_init,
/// np, sp_densities, sp_repeats.
std::vector<AttackConfig> load_attacks(const std::filesystem::path& path);
std::vector<AttackConfig> parse_attacks(std::string_view toml_text);

struct EvalRecord {
  std::string pair_id;
  std::string attack;
  std::uint64_t budget = 0;
  double sparsity = 1.0;
  bool attack_success = false;
  std::uint64_t queries_used = 0;
  std::uint64_t setup_queries = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;

  /// Success at threshold theta: goal reached and sparsity strictly below theta.
  bool succeeds_below(double theta) const { return attack_success && sparsity < theta; }
};

struct CellFailure {
  std::string pair_id;
  std::string attack;
  std::uint64_t budget = 0;
  std::string message;
};

struct EvalOptions {
  std::vector<std::uint64_t> budgets;
  std::vector<double> thresholds;
  std::size_t workers = 1;
  std::uint64_t master_seed = 0;
  /// When set, traces go to <trace_root>/<attack>/<pair>/<budget>/trace.csv.
  std::optional<std::filesystem::path> trace_root;
};

struct EvalOutput {
  std::vector<EvalRecord> records;
  std::vector<CellFailure> failures;
};

/// FNV-1a/SplitMix64 hash of "<master>|<pair>|<attack>|<budget>".
std::uint64_t cell_seed(std::uint64_t master_seed, const std::string& pair_id, const std::string& attack,
                        std::uint64_t budget);
/// Seed for the untargeted starting point; shared by every attack on a pair.
std::uint64_t init_seed(std::uint64_t master_seed, const std::string& pair_id);

/// Runs every (pair, attack, budget) cell. Records come back in cell order
/// regardless of how workers interleave. A cell that throws (transport error,
/// misclassified source, ...) is listed in `failures` instead.
EvalOutput run_evaluation(const std::vector<EvalPair>& pairs, const std::vector<AttackConfig>& attacks,
                          const EvalOptions& options, const OracleFactory& factory);

/// One cell, exposed for tests. Throws on failure.
EvalRecord run_cell(const EvalPair& pair, const AttackConfig& attack, std::uint64_t budget,
                    std::uint64_t master_seed, DecisionOracle& oracle, AttackTrace* trace = nullptr);

struct AsrPoint {
  double threshold = 0.0;
  double rate = 0.0;
};

struct GroupSummary {
  std::string attack;
  std::uint64_t budget = 0;
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::vector<AsrPoint> asr;
};

/// Nearest-rank percentile: the sorted element of 1-based rank max(1, ceil(q * n)).
/// Always an observed value, never interpolated.
double percentile(std::vector<double> values, double q);

/// Groups by (attack, budget), sorted by attack then budget.
std::vector<GroupSummary> summarize(const std::vector<EvalRecord>& records, const std::vector<double>& thresholds);

void write_records_csv(std::ostream& out, const std::vector<EvalRecord>& records,
                       const std::vector<double>& thresholds);
/// Reads records and the threshold grid encoded in the header.
std::vector<EvalRecord> read_records_csv(std::istream& in, std::vector<double>* thresholds = nullptr);
void write_timings_csv(std::ostream& out, const std::vector<EvalRecord>& records);
void write_failures_csv(std::ostream& out, const std::vector<CellFailure>& failures);
void write_summary_json(std::ostream& out, const std::vector<GroupSummary>& summary);
void write_summary_csv(std::ostream& out, const std::vector<GroupSummary>& summary);

/// Writes records.csv, timings.csv, failures.csv and summary.json into `dir`.
void write_evaluation(const std::filesystem::path& dir, const EvalOutput& output,
                      const std::vector<double>& thresholds);

enum class SweepAxis { population_size, mutation_rate, recombination_scheme, mutation_scheme };
SweepAxis parse_sweep_axis(const std::string& text);

struct SweepRow {
  std::string value;
  std::vector<GroupSummary> summary;
  std::vector<EvalRecord> records;
  std::vector<CellFailure> failures;
};

/// One evaluation per axis value with the base attack's seeds, so every value
/// sees the same pairs, starting points and RNG streams.
std::vector<SweepRow> sweep(const std::vector<EvalPair>& pairs, const AttackConfig& base, SweepAxis axis,
                            const std::vector<std::string>& values, const EvalOptions& options,
                            const OracleFactory& factory);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace sparsevo::harness
