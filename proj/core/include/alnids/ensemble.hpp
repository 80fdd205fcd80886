#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "alnids/learners.hpp"
#include "json.hpp"

namespace alnids {

struct EncodedDataset;

struct EnsembleMember {
  Model model;
  double weight = 1.0;
};

// Weighted indicator vote: predict 1 iff sum_e w_e * vote_e > (sum_e w_e) / 2.
// Isolation-forest members vote 1 when their anomaly score exceeds
// `anomaly_threshold`; every other member votes classify(row).
struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  double anomaly_threshold = 0.5;

  void validate() const;
};

// The vote rule on precomputed member votes. Throws if no weight is positive.
std::uint8_t weighted_vote(std::span<const std::uint8_t> votes, std::span<const double> weights);

std::vector<std::uint8_t> member_votes(const EnsembleSpec& spec, std::span<const float> row);
std::uint8_t ensemble_classify(const EnsembleSpec& spec, std::span<const float> row);

// Recipe for building an ensemble from labeled data: one learner config and
// weight per member.
struct EnsembleRecipe {
  struct Entry {
    LearnerConfig config;
    double weight = 1.0;
  };
  std::vector<Entry> entries;
  double anomaly_threshold = 0.5;

  // {RF, GB, LR, IF} with equal weights.
  static EnsembleRecipe paper_default(std::uint64_t seed);
  void validate() const;
  nlohmann::json to_json() const;
  static EnsembleRecipe from_json(const nlohmann::json& doc);
};

EnsembleSpec train_ensemble(const EnsembleRecipe& recipe, const EncodedDataset& data,
                            std::span<const std::size_t> rows, std::span<const std::uint8_t> labels);

// Adapts an ensemble to the classifier interface. predict_proba is the
// weighted vote fraction sum_e w_e vote_e / sum_e w_e, so classify() at 0.5
// is exactly the strict-majority rule above.
class EnsembleModel final : public ProbabilisticClassifier {
 public:
  explicit EnsembleModel(EnsembleSpec spec);

  const EnsembleSpec& spec() const { return spec_; }
  std::size_t dimension() const override;
  double predict_proba(std::span<const float> row) const override;
  std::uint8_t classify(std::span<const float> row) const override;
  using ProbabilisticClassifier::classify;

 private:
  EnsembleSpec spec_;
  std::vector<double> weights_;
  double total_weight_ = 0.0;
};

}  // namespace alnids
