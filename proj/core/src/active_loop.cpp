#include "alnids/active_loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"

namespace alnids {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Stream identifiers for derive_seed.
constexpr std::uint64_t kSeedSetStream = 0xA1;
constexpr std::uint64_t kLearnerStream = 0xA2;
constexpr std::uint64_t kIsolationStream = 0xA3;

LearnerSpec seeded(const LoopConfig& config) {
  if (const auto* single = std::get_if<LearnerConfig>(&config.learner)) {
    LearnerConfig c = *single;
    c.seed = derive_seed(config.seed, kLearnerStream ^ (c.seed << 8));
    return c;
  }
  EnsembleRecipe recipe = std::get<EnsembleRecipe>(config.learner);
  for (auto& e : recipe.entries) e.config.seed = derive_seed(config.seed, kLearnerStream ^ (e.config.seed << 8));
  return recipe;
}

}  // namespace

void LoopConfig::validate() const {
  if (n_seed < 1) throw InvalidArgument("n_seed must be at least 1");
  for (std::size_t c : checkpoints) {
    if (c < 1 || c > budget) {
      throw InvalidArgument("checkpoint " + std::to_string(c) + " outside [1, budget]");
    }
  }
  if (!(tie_tolerance >= 0.0)) throw InvalidArgument("tie_tolerance must be non-negative");
  if (const auto* single = std::get_if<LearnerConfig>(&learner)) {
    single->validate();
    if (single->kind == LearnerKind::kIsolationForest) {
      throw InvalidArgument("the active-learning learner must be a classifier, not an isolation forest");
    }
  } else {
    std::get<EnsembleRecipe>(learner).validate();
  }
  if (strategy == Strategy::kIsolation && isolation.kind != LearnerKind::kIsolationForest) {
    throw InvalidArgument("isolation sampling needs an isolation forest config");
  }
}

std::string LoopConfig::learner_name() const {
  if (const auto* single = std::get_if<LearnerConfig>(&learner)) {
    switch (single->kind) {
      case LearnerKind::kLogistic: return "lr";
      case LearnerKind::kRandomForest: return "rf";
      case LearnerKind::kGradientBoosting: return "gb";
      case LearnerKind::kIsolationForest: return "if";
    }
  }
  return "ensemble";
}

nlohmann::json LoopConfig::to_json() const {
  nlohmann::json learner_doc;
  if (const auto* single = std::get_if<LearnerConfig>(&learner)) {
    learner_doc = {{"type", "single"}, {"config", single->to_json()}};
  } else {
    learner_doc = {{"type", "ensemble"}, {"recipe", std::get<EnsembleRecipe>(learner).to_json()}};
  }
  return {{"n_seed", n_seed},
          {"budget", budget},
          {"checkpoints", checkpoints},
          {"learner", learner_doc},
          {"strategy", to_string(strategy)},
          {"seed", seed},
          {"tie_tolerance", tie_tolerance},
          {"isolation", isolation.to_json()}};
}

LoopConfig LoopConfig::from_json(const nlohmann::json& doc) {
  LoopConfig c;
  c.n_seed = doc.value("n_seed", c.n_seed);
  c.budget = doc.value("budget", c.budget);
  c.checkpoints = doc.value("checkpoints", c.checkpoints);
  if (doc.contains("learner")) {
    const auto& l = doc.at("learner");
    if (l.value("type", std::string("single")) == "ensemble") {
      c.learner = EnsembleRecipe::from_json(l.at("recipe"));
    } else {
      c.learner = LearnerConfig::from_json(l.at("config"));
    }
  }
  c.strategy = parse_strategy(doc.value("strategy", std::string(to_string(c.strategy))));
  c.seed = doc.value("seed", c.seed);
  c.tie_tolerance = doc.value("tie_tolerance", c.tie_tolerance);
  if (doc.contains("isolation")) c.isolation = LearnerConfig::from_json(doc.at("isolation"));
  c.validate();
  return c;
}

double Trace::f1_after(std::size_t queries) const { return snapshot_after(queries).f1; }

const MetricsSnapshot& Trace::snapshot_after(std::size_t queries) const {
  if (queries == 0 || events.empty()) return initial;
  return events[std::min(queries, events.size()) - 1].dev;
}

std::shared_ptr<const ProbabilisticClassifier> fit_learner(const LoopConfig& config,
                                                           const EncodedDataset& data,
                                                           std::span<const std::size_t> rows,
                                                           std::span<const std::uint8_t> labels) {
  const LearnerSpec spec = seeded(config);
  if (const auto* single = std::get_if<LearnerConfig>(&spec)) {
    return std::make_shared<Model>(train(*single, data, rows, labels));
  }
  return std::make_shared<EnsembleModel>(
      train_ensemble(std::get<EnsembleRecipe>(spec), data, rows, labels));
}

ActiveState initialize(const LoopConfig& config, const EncodedDataset& train) {
  config.validate();
  const std::size_t n = train.size();
  if (n < config.n_seed) {
    throw InvalidArgument("training split has " + std::to_string(n) + " rows, fewer than n_seed = " +
                          std::to_string(config.n_seed));
  }
  Rng rng(derive_seed(config.seed, kSeedSetStream));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t k = 0; k < config.n_seed; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, n - k));
    std::swap(order[k], order[j]);
  }
  std::vector<std::size_t> seed_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.n_seed));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(config.n_seed), order.end());
  std::sort(seed_rows.begin(), seed_rows.end());

  ActiveState state{config, &train, std::move(seed_rows), {}, Pool(train.matrix, std::move(rest)),
                    nullptr, 0, 0, std::move(rng)};
  state.labeled_labels.reserve(state.labeled_rows.size() + config.budget);
  for (std::size_t r : state.labeled_rows) state.labeled_labels.push_back(train.labels[r]);

  if (config.strategy == Strategy::kIsolation && !state.pool.empty()) {
    LearnerConfig iso = config.isolation;
    iso.seed = derive_seed(config.seed, kIsolationStream ^ (iso.seed << 8));
    cache_isolation_scores(state.pool, train, iso);
    ++state.isolation_cache_builds;
  }
  state.model = fit_learner(config, train, state.labeled_rows, state.labeled_labels);
  return state;
}

std::optional<PendingQuery> propose(ActiveState& state) {
  if (state.queries_used >= state.config.budget || state.pool.empty()) return std::nullopt;
  const auto start = Clock::now();
  const Selection sel =
      select(state.config.strategy, state.model.get(), state.pool, state.rng, state.config.tie_tolerance);
  PendingQuery pending;
  pending.query_seconds = seconds_since(start);
  pending.query_number = state.queries_used + 1;
  pending.index = sel.index;
  pending.score = sel.score;
  const auto row = state.train->matrix.row(sel.index);
  try {
    pending.probability = state.model->predict_proba(row);
  } catch (const InvalidArgument&) {
    pending.probability = std::numeric_limits<double>::quiet_NaN();
  }
  return pending;
}

QueryEvent apply_label(ActiveState& state, const PendingQuery& pending, std::uint8_t label,
                       const EncodedDataset& dev) {
  if (pending.query_number != state.queries_used + 1) {
    throw InvalidArgument("query " + std::to_string(pending.query_number) + " is not the pending query");
  }
  state.pool.remove(pending.index);
  state.labeled_rows.push_back(pending.index);
  state.labeled_labels.push_back(label ? 1 : 0);
  ++state.queries_used;

  const auto start = Clock::now();
  state.model = fit_learner(state.config, *state.train, state.labeled_rows, state.labeled_labels);
  QueryEvent event;
  event.train_seconds = seconds_since(start);
  event.query_number = pending.query_number;
  event.index = pending.index;
  event.score = pending.score;
  event.probability = pending.probability;
  event.label = label ? 1 : 0;
  event.query_seconds = pending.query_seconds;
  event.dev = evaluate(*state.model, dev);
  return event;
}

StepOutcome step(ActiveState& state, Oracle& oracle, const EncodedDataset& dev) {
  if (state.queries_used >= state.config.budget) return {StepStatus::kBudgetExhausted, std::nullopt};
  if (state.pool.empty()) return {StepStatus::kPoolExhausted, std::nullopt};
  const auto pending = propose(state);
  const std::uint8_t label = oracle.label(pending->index);
  return {StepStatus::kOk, apply_label(state, *pending, label, dev)};
}

Trace run(const LoopConfig& config, const EncodedDataset& train, const EncodedDataset& dev, Oracle& oracle,
          const EventCallback& on_event) {
  Trace trace;
  const auto start = Clock::now();
  ActiveState state = initialize(config, train);
  trace.initial_train_seconds = seconds_since(start);
  trace.initial = evaluate(*state.model, dev);
  while (true) {
    StepOutcome outcome = step(state, oracle, dev);
    if (outcome.status != StepStatus::kOk) break;
    if (on_event) on_event(*outcome.event);
    trace.events.push_back(std::move(*outcome.event));
  }
  return trace;
}

nlohmann::json to_json(const QueryEvent& e, bool include_timing) {
  nlohmann::json doc = {{"query", e.query_number},
                        {"index", e.index},
                        {"score", e.score},
                        {"probability", std::isnan(e.probability) ? nlohmann::json(nullptr)
                                                                  : nlohmann::json(e.probability)},
                        {"label", e.label},
                        {"dev", to_json(e.dev)}};
  if (include_timing) {
    doc["train_seconds"] = e.train_seconds;
    doc["query_seconds"] = e.query_seconds;
  }
  return doc;
}

void write_trace_jsonl(std::ostream& out, const Trace& trace, bool include_timing) {
  nlohmann::json initial = {{"query", 0}, {"dev", to_json(trace.initial)}};
  if (include_timing) initial["train_seconds"] = trace.initial_train_seconds;
  out << initial.dump() << '\n';
  for (const auto& e : trace.events) out << to_json(e, include_timing).dump() << '\n';
}

nlohmann::json trace_summary(const Trace& trace, const LoopConfig& config) {
  nlohmann::json checkpoints = nlohmann::json::object();
  checkpoints["0"] = trace.initial.f1;
  for (std::size_t c : config.checkpoints) checkpoints[std::to_string(c)] = trace.f1_after(c);
  return {{"schema_version", 1},
          {"config", config.to_json()},
          {"queries", trace.events.size()},
          {"f1", checkpoints},
          {"final", to_json(trace.snapshot_after(trace.events.size()))}};
}

}  // namespace alnids
