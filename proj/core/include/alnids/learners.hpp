#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "alnids/matrix.hpp"
#include "alnids/trees.hpp"
#include "json.hpp"

namespace alnids {

struct EncodedDataset;

enum class LearnerKind { kLogistic, kRandomForest, kGradientBoosting, kIsolationForest };

std::string_view to_string(LearnerKind kind);
// Accepts the long names and the short forms lr / rf / gb / if.
LearnerKind parse_learner_kind(std::string_view name);

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kRandomForest;
  std::uint64_t seed = 0;

  // Forest-like kinds.
  std::size_t n_estimators = 10;
  std::size_t max_depth = 0;     // 0 = unlimited (random forest)
  std::size_t max_features = 0;  // 0 = ceil(sqrt(d)) for random forests
  bool bootstrap = true;

  // Logistic regression: full-batch proximal gradient descent.
  double l2_lambda = 1.0;
  double step_size = 0.1;
  std::size_t iterations = 500;

  // Gradient boosting.
  double shrinkage = 0.1;

  // Isolation forest.
  std::size_t subsample = 256;
  double anomaly_threshold = 0.5;  // score > threshold => anomaly

  static LearnerConfig logistic();
  static LearnerConfig random_forest();
  static LearnerConfig gradient_boosting();
  static LearnerConfig isolation_forest();
  static LearnerConfig defaults(LearnerKind kind);

  void validate() const;
  nlohmann::json to_json() const;
  static LearnerConfig from_json(const nlohmann::json& doc);
};

// Anything that yields P(attack | row). Isolation forests answer classify()
// through their anomaly threshold but have no class probability.
struct ProbabilisticClassifier {
  virtual ~ProbabilisticClassifier() = default;

  virtual std::size_t dimension() const = 0;
  virtual double predict_proba(std::span<const float> row) const = 0;
  virtual std::uint8_t classify(std::span<const float> row) const {
    return predict_proba(row) > 0.5 ? 1 : 0;
  }

  std::uint8_t classify(std::span<const float> row, double threshold) const {
    return predict_proba(row) > threshold ? 1 : 0;
  }
  std::vector<double> predict_proba_rows(const Matrix& x, std::span<const std::size_t> rows) const;
  std::vector<std::uint8_t> classify_all(const Matrix& x) const;
};

struct LinearModel {
  std::vector<double> weights;  // on standardized features
  double intercept = 0.0;
  std::vector<double> center;
  std::vector<double> scale;
};

struct Forest {
  std::vector<Tree> trees;
};

struct BoostedForest {
  double initial_log_odds = 0.0;
  double shrinkage = 0.1;
  std::vector<Tree> trees;
};

struct IsolationForest {
  std::vector<Tree> trees;
  std::size_t subsample = 0;  // psi actually used
  double normalizer = 0.0;    // c(psi)
};

class Model final : public ProbabilisticClassifier {
 public:
  using Body = std::variant<LinearModel, Forest, BoostedForest, IsolationForest>;

  Model(LearnerConfig config, std::vector<std::string> feature_names, Body body);

  LearnerKind kind() const { return config_.kind; }
  const LearnerConfig& config() const { return config_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const Body& body() const { return body_; }

  std::size_t dimension() const override { return feature_names_.size(); }
  // Logistic: sigmoid of the linear score. Random forest: mean of the
  // Laplace-smoothed leaf ratios (pos + 1) / (n + 2). Boosting: sigmoid of the
  // boosted score. Throws for isolation forests.
  double predict_proba(std::span<const float> row) const override;
  std::uint8_t classify(std::span<const float> row) const override;
  using ProbabilisticClassifier::classify;

  // s = 2^(-E[h(x)] / c(psi)); higher is more anomalous. Isolation forests only.
  double anomaly_score(std::span<const float> row) const;
  double mean_path_length(std::span<const float> row) const;
  std::vector<double> anomaly_scores(const Matrix& x, std::span<const std::size_t> rows) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& doc);

 private:
  void check_row(std::span<const float> row) const;

  LearnerConfig config_;
  std::vector<std::string> feature_names_;
  Body body_;
  std::vector<double> linear_coef_;
  double linear_offset_ = 0.0;
};

// Trains on the listed rows of `data` with the given labels (which may differ
// from data.labels when they come from an analyst).
Model train(const LearnerConfig& config, const EncodedDataset& data,
            std::span<const std::size_t> rows, std::span<const std::uint8_t> labels);
Model train(const LearnerConfig& config, const EncodedDataset& data);

// Mean decrease in Gini impurity, normalized per tree, averaged and
// renormalized to sum to one. Random forests only. A forest without any
// split reports all zeros.
std::vector<std::pair<std::string, double>> feature_importance(const Model& model);

// Regularized logistic objective the optimizer minimizes, evaluated on
// standardized features: (1/n) [sum log(1+e^m) - y m + (lambda/2) |w|^2].
double logistic_objective(const LinearModel& model, const EncodedDataset& data,
                          std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                          double l2_lambda);

// Objective after each accepted iteration, for inspecting convergence.
struct LogisticFit {
  LinearModel model;
  std::vector<double> objective_trace;
};
LogisticFit fit_logistic(const LearnerConfig& config, const EncodedDataset& data,
                         std::span<const std::size_t> rows, std::span<const std::uint8_t> labels);

}  // namespace alnids
