#include "alnids/ensemble.hpp"

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"
#include "alnids/random.hpp"

namespace alnids {

namespace {

void check_weights(std::span<const double> weights) {
  bool any_positive = false;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("ensemble weights must be non-negative");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw InvalidArgument("ensemble needs at least one positive weight");
}

std::uint8_t member_vote(const Model& model, std::span<const float> row, double anomaly_threshold) {
  if (model.kind() == LearnerKind::kIsolationForest) {
    return model.anomaly_score(row) > anomaly_threshold ? 1 : 0;
  }
  return model.classify(row);
}

}  // namespace

void EnsembleSpec::validate() const {
  std::vector<double> weights;
  for (const auto& m : members) weights.push_back(m.weight);
  check_weights(weights);
  for (const auto& m : members) {
    if (m.model.dimension() != members.front().model.dimension()) {
      throw InvalidArgument("ensemble members disagree on feature dimension");
    }
  }
}

std::uint8_t weighted_vote(std::span<const std::uint8_t> votes, std::span<const double> weights) {
  if (votes.size() != weights.size()) throw InvalidArgument("one vote per weight required");
  check_weights(weights);
  double yes = 0.0, total = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (votes[i]) yes += weights[i];
    total += weights[i];
  }
  return yes > total / 2.0 ? 1 : 0;
}

std::vector<std::uint8_t> member_votes(const EnsembleSpec& spec, std::span<const float> row) {
  std::vector<std::uint8_t> votes;
  votes.reserve(spec.members.size());
  for (const auto& m : spec.members) votes.push_back(member_vote(m.model, row, spec.anomaly_threshold));
  return votes;
}

std::uint8_t ensemble_classify(const EnsembleSpec& spec, std::span<const float> row) {
  std::vector<double> weights;
  for (const auto& m : spec.members) weights.push_back(m.weight);
  return weighted_vote(member_votes(spec, row), weights);
}

EnsembleRecipe EnsembleRecipe::paper_default(std::uint64_t seed) {
  EnsembleRecipe r;
  const LearnerKind kinds[] = {LearnerKind::kRandomForest, LearnerKind::kGradientBoosting,
                               LearnerKind::kLogistic, LearnerKind::kIsolationForest};
  std::uint64_t stream = 0;
  for (LearnerKind k : kinds) {
    LearnerConfig c = LearnerConfig::defaults(k);
    c.seed = derive_seed(seed, 0xE5 + stream++);
    r.entries.push_back({c, 1.0});
  }
  return r;
}

void EnsembleRecipe::validate() const {
  std::vector<double> weights;
  for (const auto& e : entries) {
    e.config.validate();
    weights.push_back(e.weight);
  }
  check_weights(weights);
}

nlohmann::json EnsembleRecipe::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& e : entries) members.push_back({{"learner", e.config.to_json()}, {"weight", e.weight}});
  return {{"members", members}, {"anomaly_threshold", anomaly_threshold}};
}

EnsembleRecipe EnsembleRecipe::from_json(const nlohmann::json& doc) {
  EnsembleRecipe r;
  for (const auto& m : doc.at("members")) {
    r.entries.push_back({LearnerConfig::from_json(m.at("learner")), m.value("weight", 1.0)});
  }
  r.anomaly_threshold = doc.value("anomaly_threshold", 0.5);
  r.validate();
  return r;
}

EnsembleSpec train_ensemble(const EnsembleRecipe& recipe, const EncodedDataset& data,
                            std::span<const std::size_t> rows, std::span<const std::uint8_t> labels) {
  recipe.validate();
  EnsembleSpec spec;
  spec.anomaly_threshold = recipe.anomaly_threshold;
  for (const auto& e : recipe.entries) {
    spec.members.push_back({train(e.config, data, rows, labels), e.weight});
  }
  return spec;
}

EnsembleModel::EnsembleModel(EnsembleSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (const auto& m : spec_.members) {
    weights_.push_back(m.weight);
    total_weight_ += m.weight;
  }
}

std::size_t EnsembleModel::dimension() const { return spec_.members.front().model.dimension(); }

double EnsembleModel::predict_proba(std::span<const float> row) const {
  double yes = 0.0;
  for (std::size_t i = 0; i < spec_.members.size(); ++i) {
    if (member_vote(spec_.members[i].model, row, spec_.anomaly_threshold)) yes += weights_[i];
  }
  return yes / total_weight_;
}

std::uint8_t EnsembleModel::classify(std::span<const float> row) const {
  return weighted_vote(member_votes(spec_, row), weights_);
}

}  // namespace alnids
