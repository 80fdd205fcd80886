#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alnids/active_loop.hpp"
#include "alnids/dataset.hpp"
#include "alnids/metrics.hpp"
#include "json.hpp"

namespace alnids {

// Named per-attack datasets, materialized on demand so that only one encoded
// dataset needs to be resident at a time.
class DatasetCatalog {
 public:
  using Loader = std::function<PreparedDataset(const std::string& name)>;

  DatasetCatalog(std::vector<std::string> names, Loader loader);

  // Builds every attack dataset from parsed records. `max_rows` > 0 caps each
  // dataset with a seeded uniform row sample (desk-scale mode).
  static DatasetCatalog from_records(std::shared_ptr<const std::vector<RawRecord>> records,
                                     std::uint64_t split_seed, std::size_t max_rows = 0,
                                     std::size_t min_occurrences = 100);
  // Reads datasets written by prepare (one subdirectory per attack).
  static DatasetCatalog from_directory(const std::filesystem::path& root);

  const std::vector<std::string>& names() const { return names_; }
  bool contains(const std::string& name) const;
  PreparedDataset load(const std::string& name) const;

  // Resolves a requested subset ("smurf" or "smurf."); empty = all. Throws on
  // unknown names or an empty result.
  std::vector<std::string> resolve(const std::vector<std::string>& requested) const;

 private:
  std::vector<std::string> names_;
  Loader loader_;
};

// Uniform row sample of at most `max_rows` rows, in original order.
BinaryDataset cap_rows(const BinaryDataset& dataset, std::size_t max_rows, std::uint64_t seed);

struct ExperimentConfig {
  std::vector<std::string> attacks;  // empty = every dataset in the catalog
  std::vector<std::string> learners = {"lr", "rf"};
  std::vector<std::string> strategies = {"random", "uncertainty", "entropy"};
  std::vector<std::uint64_t> seeds = {0};
  // Template for every run; learner, strategy and seed are set per run.
  LoopConfig loop;
  // Threshold for the isolation-forest baseline.
  double anomaly_threshold = 0.5;
  std::filesystem::path output_dir;  // empty = nothing written

  void validate() const;
};

// A learner name as accepted on the command line: lr, rf, gb or ensemble.
LearnerSpec learner_spec(const std::string& name);

struct ResultRow {
  std::string key;
  std::vector<MeanStd> values;
  // Per-attack rows of a single-seed run have no spread to show.
  bool show_std = true;
};

struct ResultTable {
  std::string title;
  std::string key_header;
  std::vector<std::string> columns;
  std::vector<ResultRow> rows;

  const ResultRow& row(const std::string& key) const;
  std::size_t column(const std::string& name) const;

  std::string to_text() const;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct RunRecord {
  std::string attack;
  std::string learner;
  std::string strategy;
  std::uint64_t seed = 0;
  Trace trace;
  std::size_t isolation_cache_builds = 0;
};

struct GridResult {
  ResultTable table;   // F1 checkpoints, deterministic
  ResultTable timing;  // wall-clock seconds per step
  std::vector<std::size_t> checkpoints;  // including 0 for the initial model
  std::vector<RunRecord> runs;

  // F1 after `checkpoint` queries for one attack, averaged over seeds.
  double attack_f1(const std::string& attack, const std::string& learner, const std::string& strategy,
                   std::size_t checkpoint) const;
  // The above, averaged over attacks.
  MeanStd cell_f1(const std::string& learner, const std::string& strategy,
                  std::size_t checkpoint) const;
  std::vector<const RunRecord*> select(const std::string& learner, const std::string& strategy) const;
};

struct BaselineOracleRow {
  std::string attack;
  double prevalence = 0.0;
  std::vector<double> baseline_f1;  // one per seed
  std::vector<double> oracle_f1;
  std::vector<MetricsSnapshot> oracle_dev;
  std::vector<double> oracle_train_seconds;
};

struct BaselineOracleResult {
  ResultTable table;
  ResultTable timing;
  std::vector<BaselineOracleRow> rows;

  MeanStd baseline() const;
  MeanStd oracle() const;
};

struct ZScoreRun {
  std::uint64_t seed = 0;
  std::size_t seed_positives = 0;
  MetricsSnapshot dev;
  ZScoreReport report;
};

struct ZScoreResult {
  std::string attack;
  std::vector<ZScoreRun> runs;
  ResultTable table;
};

using ProgressFn = std::function<void(const std::string&)>;

// Parses a KDD file and writes one prepared directory per attack plus an
// index.json listing them. Returns the dataset names written.
std::vector<std::string> cmd_prepare(const std::filesystem::path& raw, const std::filesystem::path& out_dir,
                                     std::uint64_t split_seed, std::size_t max_rows = 0);
std::vector<std::string> prepare_catalog(const DatasetCatalog& catalog, const std::filesystem::path& out_dir);

// Isolation-forest baseline and fully supervised random-forest oracle, both
// scored on dev.
BaselineOracleResult cmd_baseline_oracle(const DatasetCatalog& catalog, const ExperimentConfig& config,
                                         const ProgressFn& progress = {});

// Every learner x strategy cell on every attack and seed.
GridResult cmd_grid(const DatasetCatalog& catalog, const ExperimentConfig& config,
                    const ProgressFn& progress = {});

// Random-forest learner with entropy versus isolation-forest sampling.
GridResult cmd_unsup_sampling(const DatasetCatalog& catalog, const ExperimentConfig& config,
                              const ProgressFn& progress = {});

// Feature z-scores of the seed-set model (n_seed labels, no queries) on dev.
ZScoreResult cmd_zscore_report(const DatasetCatalog& catalog, const std::string& attack,
                               const ExperimentConfig& config, const ProgressFn& progress = {});

}  // namespace alnids
