#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "alnids/ensemble.hpp"
#include "alnids/learners.hpp"
#include "alnids/metrics.hpp"
#include "alnids/random.hpp"
#include "alnids/sampling.hpp"
#include "json.hpp"

namespace alnids {

struct EncodedDataset;

using LearnerSpec = std::variant<LearnerConfig, EnsembleRecipe>;

struct LoopConfig {
  std::size_t n_seed = 1000;
  std::size_t budget = 100;
  std::vector<std::size_t> checkpoints = {10, 50, 100};
  LearnerSpec learner = LearnerConfig::random_forest();
  Strategy strategy = Strategy::kEntropy;
  std::uint64_t seed = 0;
  double tie_tolerance = 0.0;
  // Used only by isolation sampling to score the pool once.
  LearnerConfig isolation = LearnerConfig::isolation_forest();

  void validate() const;
  // "lr", "rf", "gb", "if" or "ensemble".
  std::string learner_name() const;
  nlohmann::json to_json() const;
  static LoopConfig from_json(const nlohmann::json& doc);
};

// Source of labels for queried rows of the training split.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::uint8_t label(std::size_t index) = 0;
};

// Answers with the dataset's own labels.
class ReplayOracle final : public Oracle {
 public:
  explicit ReplayOracle(std::span<const std::uint8_t> labels) : labels_(labels) {}
  std::uint8_t label(std::size_t index) override { return labels_[index]; }

 private:
  std::span<const std::uint8_t> labels_;
};

struct ActiveState {
  LoopConfig config;
  const EncodedDataset* train = nullptr;
  std::vector<std::size_t> labeled_rows;
  std::vector<std::uint8_t> labeled_labels;
  Pool pool;
  std::shared_ptr<const ProbabilisticClassifier> model;
  std::size_t queries_used = 0;
  std::size_t isolation_cache_builds = 0;
  Rng rng;
};

struct QueryEvent {
  std::size_t query_number = 0;  // 1-based
  std::size_t index = 0;         // row in the training split
  double score = 0.0;            // strategy score at selection time
  double probability = 0.0;      // model P(attack) at selection time, NaN if undefined
  std::uint8_t label = 0;
  double train_seconds = 0.0;
  double query_seconds = 0.0;
  MetricsSnapshot dev;
};

// A selected row awaiting its label.
struct PendingQuery {
  std::size_t query_number = 0;
  std::size_t index = 0;
  double score = 0.0;
  double probability = 0.0;
  double query_seconds = 0.0;
};

enum class StepStatus { kOk, kBudgetExhausted, kPoolExhausted };

struct StepOutcome {
  StepStatus status = StepStatus::kOk;
  std::optional<QueryEvent> event;
};

struct Trace {
  MetricsSnapshot initial;
  double initial_train_seconds = 0.0;
  std::vector<QueryEvent> events;

  // F1 on dev after `queries` labels (0 = initial). Past the end of a
  // shortened run, the last available value.
  double f1_after(std::size_t queries) const;
  const MetricsSnapshot& snapshot_after(std::size_t queries) const;
};

// Trains the configured learner (or ensemble) on the given rows.
std::shared_ptr<const ProbabilisticClassifier> fit_learner(const LoopConfig& config,
                                                           const EncodedDataset& data,
                                                           std::span<const std::size_t> rows,
                                                           std::span<const std::uint8_t> labels);

// Draws the seed set uniformly without replacement, labels it from the
// training split's ground truth, and trains the first model.
ActiveState initialize(const LoopConfig& config, const EncodedDataset& train);

// Selection half of a step. Nullopt when the budget or pool is exhausted.
std::optional<PendingQuery> propose(ActiveState& state);
// Label half of a step: moves the row to the labeled set, retrains from
// scratch and scores the new model on `dev`.
QueryEvent apply_label(ActiveState& state, const PendingQuery& pending, std::uint8_t label,
                       const EncodedDataset& dev);

StepOutcome step(ActiveState& state, Oracle& oracle, const EncodedDataset& dev);

using EventCallback = std::function<void(const QueryEvent&)>;

Trace run(const LoopConfig& config, const EncodedDataset& train, const EncodedDataset& dev,
          Oracle& oracle, const EventCallback& on_event = {});

// One JSON object per line; the first line is the initial snapshot.
// Timing fields are omitted when include_timing is false.
void write_trace_jsonl(std::ostream& out, const Trace& trace, bool include_timing = true);
nlohmann::json to_json(const QueryEvent& event, bool include_timing = true);
nlohmann::json trace_summary(const Trace& trace, const LoopConfig& config);

}  // namespace alnids
