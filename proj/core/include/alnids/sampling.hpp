#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "alnids/learners.hpp"
#include "alnids/matrix.hpp"
#include "alnids/random.hpp"

namespace alnids {

struct EncodedDataset;

enum class Strategy { kRandom, kUncertainty, kEntropy, kIsolation };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);

// Unlabeled candidates: row indices into a matrix, kept in ascending order.
class Pool {
 public:
  Pool(const Matrix& matrix, std::vector<std::size_t> candidates);

  const Matrix& matrix() const { return *matrix_; }
  const std::vector<std::size_t>& candidates() const { return candidates_; }
  std::size_t size() const { return candidates_.size(); }
  bool empty() const { return candidates_.empty(); }
  bool contains(std::size_t index) const;

  // Throws if `index` is not a current candidate.
  void remove(std::size_t index);

  // Anomaly scores indexed by matrix row, computed once and never refreshed.
  void set_anomaly_scores(std::vector<double> by_row);
  bool has_anomaly_scores() const { return anomaly_scores_.has_value(); }
  const std::vector<double>& anomaly_scores() const;

 private:
  const Matrix* matrix_;
  std::vector<std::size_t> candidates_;
  std::optional<std::vector<double>> anomaly_scores_;
};

struct Selection {
  std::size_t index = 0;
  double score = 0.0;
};

// 1 - max(p, 1 - p).
double uncertainty(double p);
// Binary entropy in bits, with 0 log 0 = 0.
double binary_entropy(double p);

// Argmax of `scores` (aligned with `candidates`). Candidates within
// `tie_tolerance` of the maximum form the tie set, collected in ascending
// index order; one rng draw picks among them only when there is more than one.
Selection select_max(std::span<const std::size_t> candidates, std::span<const double> scores, Rng& rng,
                     double tie_tolerance = 0.0);

Selection select_random(const Pool& pool, Rng& rng);
Selection select_uncertainty(const ProbabilisticClassifier& model, const Pool& pool, Rng& rng,
                             double tie_tolerance = 0.0);
Selection select_entropy(const ProbabilisticClassifier& model, const Pool& pool, Rng& rng,
                         double tie_tolerance = 0.0);
// Requires cached anomaly scores (see cache_isolation_scores).
Selection select_isolation(const Pool& pool, Rng& rng, double tie_tolerance = 0.0);

// `model` may be null for random and isolation sampling.
Selection select(Strategy strategy, const ProbabilisticClassifier* model, const Pool& pool, Rng& rng,
                 double tie_tolerance = 0.0);

// Fits an isolation forest on the pool's candidates and caches every
// candidate's anomaly score in the pool.
void cache_isolation_scores(Pool& pool, const EncodedDataset& data, const LearnerConfig& config);

}  // namespace alnids
