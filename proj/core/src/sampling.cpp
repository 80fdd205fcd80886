#include "alnids/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"

namespace alnids {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kUncertainty: return "uncertainty";
    case Strategy::kEntropy: return "entropy";
    case Strategy::kIsolation: return "isolation";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "random") return Strategy::kRandom;
  if (name == "uncertainty") return Strategy::kUncertainty;
  if (name == "entropy") return Strategy::kEntropy;
  if (name == "isolation") return Strategy::kIsolation;
  throw InvalidArgument("unknown strategy '" + std::string(name) +
                        "' (expected random | uncertainty | entropy | isolation)");
}

Pool::Pool(const Matrix& matrix, std::vector<std::size_t> candidates)
    : matrix_(&matrix), candidates_(std::move(candidates)) {
  std::sort(candidates_.begin(), candidates_.end());
  if (std::adjacent_find(candidates_.begin(), candidates_.end()) != candidates_.end()) {
    throw InvalidArgument("pool candidates must be unique");
  }
  if (!candidates_.empty() && candidates_.back() >= matrix.rows()) {
    throw InvalidArgument("pool candidate out of range");
  }
}

bool Pool::contains(std::size_t index) const {
  return std::binary_search(candidates_.begin(), candidates_.end(), index);
}

void Pool::remove(std::size_t index) {
  const auto it = std::lower_bound(candidates_.begin(), candidates_.end(), index);
  if (it == candidates_.end() || *it != index) {
    throw InvalidArgument("row " + std::to_string(index) + " is not in the pool");
  }
  candidates_.erase(it);
}

void Pool::set_anomaly_scores(std::vector<double> by_row) {
  if (by_row.size() != matrix_->rows()) throw InvalidArgument("one anomaly score per matrix row required");
  anomaly_scores_ = std::move(by_row);
}

const std::vector<double>& Pool::anomaly_scores() const {
  if (!anomaly_scores_) throw InvalidArgument("pool has no cached anomaly scores");
  return *anomaly_scores_;
}

double uncertainty(double p) { return 1.0 - std::max(p, 1.0 - p); }

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return h;
}

Selection select_max(std::span<const std::size_t> candidates, std::span<const double> scores, Rng& rng,
                     double tie_tolerance) {
  if (candidates.empty()) throw InvalidArgument("cannot select from an empty pool");
  if (candidates.size() != scores.size()) throw InvalidArgument("one score per candidate required");
  const double best = *std::max_element(scores.begin(), scores.end());
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= best - tie_tolerance) ties.push_back(i);
  }
  std::sort(ties.begin(), ties.end(),
            [&](std::size_t a, std::size_t b) { return candidates[a] < candidates[b]; });
  const std::size_t pick = ties.size() == 1 ? ties.front() : ties[uniform_below(rng, ties.size())];
  return {candidates[pick], scores[pick]};
}

Selection select_random(const Pool& pool, Rng& rng) {
  if (pool.empty()) throw InvalidArgument("cannot select from an empty pool");
  return {pool.candidates()[uniform_below(rng, pool.size())], 0.0};
}

namespace {

template <class Score>
Selection select_by_probability(const ProbabilisticClassifier& model, const Pool& pool, Rng& rng,
                                double tie_tolerance, Score score) {
  if (pool.empty()) throw InvalidArgument("cannot select from an empty pool");
  const auto& candidates = pool.candidates();
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = score(model.predict_proba(pool.matrix().row(candidates[i])));
  }
  return select_max(candidates, scores, rng, tie_tolerance);
}

}  // namespace

Selection select_uncertainty(const ProbabilisticClassifier& model, const Pool& pool, Rng& rng,
                             double tie_tolerance) {
  return select_by_probability(model, pool, rng, tie_tolerance, uncertainty);
}

Selection select_entropy(const ProbabilisticClassifier& model, const Pool& pool, Rng& rng,
                         double tie_tolerance) {
  return select_by_probability(model, pool, rng, tie_tolerance, binary_entropy);
}

Selection select_isolation(const Pool& pool, Rng& rng, double tie_tolerance) {
  if (pool.empty()) throw InvalidArgument("cannot select from an empty pool");
  const auto& cached = pool.anomaly_scores();
  const auto& candidates = pool.candidates();
  std::vector<double> scores(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = cached[candidates[i]];
  return select_max(candidates, scores, rng, tie_tolerance);
}

Selection select(Strategy strategy, const ProbabilisticClassifier* model, const Pool& pool, Rng& rng,
                 double tie_tolerance) {
  switch (strategy) {
    case Strategy::kRandom: return select_random(pool, rng);
    case Strategy::kIsolation: return select_isolation(pool, rng, tie_tolerance);
    case Strategy::kUncertainty:
    case Strategy::kEntropy:
      if (!model) throw InvalidArgument(std::string(to_string(strategy)) + " sampling needs a model");
      return strategy == Strategy::kEntropy ? select_entropy(*model, pool, rng, tie_tolerance)
                                            : select_uncertainty(*model, pool, rng, tie_tolerance);
  }
  throw InvalidArgument("unknown strategy");
}

void cache_isolation_scores(Pool& pool, const EncodedDataset& data, const LearnerConfig& config) {
  if (config.kind != LearnerKind::kIsolationForest) {
    throw InvalidArgument("isolation sampling needs an isolation forest config");
  }
  if (&pool.matrix() != &data.matrix) throw InvalidArgument("pool does not index this dataset");
  if (pool.empty()) throw InvalidArgument("cannot score an empty pool");
  const auto& candidates = pool.candidates();
  // Labels are ignored by the isolation forest.
  const std::vector<std::uint8_t> unused(candidates.size(), 0);
  const Model forest = train(config, data, candidates, unused);
  std::vector<double> by_row(data.size(), 0.0);
  for (std::size_t r : candidates) by_row[r] = forest.anomaly_score(data.matrix.row(r));
  pool.set_anomaly_scores(std::move(by_row));
}

}  // namespace alnids
