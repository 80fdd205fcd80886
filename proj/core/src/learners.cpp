#include "alnids/learners.hpp"

#include <algorithm>
#include <cmath>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"
#include "alnids/random.hpp"

namespace alnids {

namespace {

constexpr double kProbabilityFloor = 1e-9;

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

double logit(double p) {
  p = std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
  return std::log(p / (1.0 - p));
}

bool is_one_hot(const std::string& name) { return name.find('=') != std::string::npos; }

}  // namespace

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kLogistic: return "logistic";
    case LearnerKind::kRandomForest: return "random_forest";
    case LearnerKind::kGradientBoosting: return "gradient_boosting";
    case LearnerKind::kIsolationForest: return "isolation_forest";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(std::string_view name) {
  if (name == "logistic" || name == "lr") return LearnerKind::kLogistic;
  if (name == "random_forest" || name == "rf") return LearnerKind::kRandomForest;
  if (name == "gradient_boosting" || name == "gb") return LearnerKind::kGradientBoosting;
  if (name == "isolation_forest" || name == "if") return LearnerKind::kIsolationForest;
  throw InvalidArgument("unknown learner '" + std::string(name) + "'");
}

LearnerConfig LearnerConfig::logistic() {
  LearnerConfig c;
  c.kind = LearnerKind::kLogistic;
  return c;
}

LearnerConfig LearnerConfig::random_forest() {
  LearnerConfig c;
  c.kind = LearnerKind::kRandomForest;
  return c;
}

LearnerConfig LearnerConfig::gradient_boosting() {
  LearnerConfig c;
  c.kind = LearnerKind::kGradientBoosting;
  c.max_depth = 3;
  return c;
}

LearnerConfig LearnerConfig::isolation_forest() {
  LearnerConfig c;
  c.kind = LearnerKind::kIsolationForest;
  return c;
}

LearnerConfig LearnerConfig::defaults(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kLogistic: return logistic();
    case LearnerKind::kRandomForest: return random_forest();
    case LearnerKind::kGradientBoosting: return gradient_boosting();
    case LearnerKind::kIsolationForest: return isolation_forest();
  }
  return random_forest();
}

void LearnerConfig::validate() const {
  if (n_estimators < 1) throw InvalidArgument("n_estimators must be at least 1");
  if (!(l2_lambda >= 0.0)) throw InvalidArgument("l2_lambda must be non-negative");
  if (!(step_size > 0.0)) throw InvalidArgument("step_size must be positive");
  if (!(shrinkage > 0.0)) throw InvalidArgument("shrinkage must be positive");
  if (subsample < 1) throw InvalidArgument("subsample must be at least 1");
  if (kind == LearnerKind::kGradientBoosting && max_depth == 0) {
    throw InvalidArgument("gradient boosting needs a finite max_depth");
  }
}

nlohmann::json LearnerConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"seed", seed},
          {"n_estimators", n_estimators},
          {"max_depth", max_depth},
          {"max_features", max_features},
          {"bootstrap", bootstrap},
          {"l2_lambda", l2_lambda},
          {"step_size", step_size},
          {"iterations", iterations},
          {"shrinkage", shrinkage},
          {"subsample", subsample},
          {"anomaly_threshold", anomaly_threshold}};
}

LearnerConfig LearnerConfig::from_json(const nlohmann::json& doc) {
  LearnerConfig c = defaults(parse_learner_kind(doc.at("kind").get<std::string>()));
  c.seed = doc.value("seed", c.seed);
  c.n_estimators = doc.value("n_estimators", c.n_estimators);
  c.max_depth = doc.value("max_depth", c.max_depth);
  c.max_features = doc.value("max_features", c.max_features);
  c.bootstrap = doc.value("bootstrap", c.bootstrap);
  c.l2_lambda = doc.value("l2_lambda", c.l2_lambda);
  c.step_size = doc.value("step_size", c.step_size);
  c.iterations = doc.value("iterations", c.iterations);
  c.shrinkage = doc.value("shrinkage", c.shrinkage);
  c.subsample = doc.value("subsample", c.subsample);
  c.anomaly_threshold = doc.value("anomaly_threshold", c.anomaly_threshold);
  c.validate();
  return c;
}

std::vector<double> ProbabilisticClassifier::predict_proba_rows(const Matrix& x,
                                                                std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = predict_proba(x.row(rows[i]));
  return out;
}

std::vector<std::uint8_t> ProbabilisticClassifier::classify_all(const Matrix& x) const {
  std::vector<std::uint8_t> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = classify(x.row(r));
  return out;
}

Model::Model(LearnerConfig config, std::vector<std::string> feature_names, Body body)
    : config_(std::move(config)), feature_names_(std::move(feature_names)), body_(std::move(body)) {
  const bool matches =
      (config_.kind == LearnerKind::kLogistic && std::holds_alternative<LinearModel>(body_)) ||
      (config_.kind == LearnerKind::kRandomForest && std::holds_alternative<Forest>(body_)) ||
      (config_.kind == LearnerKind::kGradientBoosting && std::holds_alternative<BoostedForest>(body_)) ||
      (config_.kind == LearnerKind::kIsolationForest && std::holds_alternative<IsolationForest>(body_));
  if (!matches) throw InvalidArgument("model body does not match learner kind");
  if (const auto* lin = std::get_if<LinearModel>(&body_)) {
    const std::size_t d = feature_names_.size();
    if (lin->weights.size() != d || lin->center.size() != d || lin->scale.size() != d) {
      throw InvalidArgument("linear model size mismatch");
    }
    // Fold standardization into raw-feature coefficients once.
    linear_coef_.resize(d);
    linear_offset_ = lin->intercept;
    for (std::size_t j = 0; j < d; ++j) {
      linear_coef_[j] = lin->weights[j] / lin->scale[j];
      linear_offset_ -= linear_coef_[j] * lin->center[j];
    }
  }
}

void Model::check_row(std::span<const float> row) const {
  if (row.size() != dimension()) {
    throw InvalidArgument("row has " + std::to_string(row.size()) + " features, model expects " +
                          std::to_string(dimension()));
  }
}

double Model::predict_proba(std::span<const float> row) const {
  check_row(row);
  if (std::holds_alternative<LinearModel>(body_)) {
    double m = linear_offset_;
    for (std::size_t j = 0; j < row.size(); ++j) m += linear_coef_[j] * row[j];
    return sigmoid(m);
  }
  if (const auto* forest = std::get_if<Forest>(&body_)) {
    double sum = 0.0;
    for (const Tree& t : forest->trees) {
      const TreeNode& leaf = t.leaf(row);
      sum += (leaf.positive + 1.0) / (leaf.weight + 2.0);
    }
    return sum / static_cast<double>(forest->trees.size());
  }
  if (const auto* boosted = std::get_if<BoostedForest>(&body_)) {
    double f = boosted->initial_log_odds;
    for (const Tree& t : boosted->trees) f += boosted->shrinkage * t.leaf(row).value;
    return sigmoid(f);
  }
  throw InvalidArgument("isolation forests have no class probability; use anomaly_score");
}

std::uint8_t Model::classify(std::span<const float> row) const {
  if (kind() == LearnerKind::kIsolationForest) {
    return anomaly_score(row) > config_.anomaly_threshold ? 1 : 0;
  }
  return predict_proba(row) > 0.5 ? 1 : 0;
}

double Model::mean_path_length(std::span<const float> row) const {
  check_row(row);
  const auto* iso = std::get_if<IsolationForest>(&body_);
  if (!iso) throw InvalidArgument("path length requires an isolation forest");
  double total = 0.0;
  for (const Tree& t : iso->trees) {
    std::size_t i = 0;
    std::size_t depth = 0;
    while (!t.nodes[i].is_leaf()) {
      const TreeNode& n = t.nodes[i];
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                             : n.right);
      ++depth;
    }
    total += static_cast<double>(depth) + t.nodes[i].value;
  }
  return total / static_cast<double>(iso->trees.size());
}

double Model::anomaly_score(std::span<const float> row) const {
  const double h = mean_path_length(row);
  const double c = std::get<IsolationForest>(body_).normalizer;
  if (c <= 0.0) return 0.5;
  return std::exp2(-h / c);
}

std::vector<double> Model::anomaly_scores(const Matrix& x, std::span<const std::size_t> rows) const {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = anomaly_score(x.row(rows[i]));
  return out;
}

nlohmann::json Model::to_json() const {
  nlohmann::json doc = {{"schema_version", 1},
                        {"kind", to_string(kind())},
                        {"config", config_.to_json()},
                        {"feature_names", feature_names_}};
  auto trees_json = [](const std::vector<Tree>& trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) arr.push_back(alnids::to_json(t));
    return arr;
  };
  if (const auto* lin = std::get_if<LinearModel>(&body_)) {
    doc["linear"] = {{"weights", lin->weights},
                     {"intercept", lin->intercept},
                     {"center", lin->center},
                     {"scale", lin->scale}};
  } else if (const auto* forest = std::get_if<Forest>(&body_)) {
    doc["trees"] = trees_json(forest->trees);
  } else if (const auto* boosted = std::get_if<BoostedForest>(&body_)) {
    doc["initial_log_odds"] = boosted->initial_log_odds;
    doc["shrinkage"] = boosted->shrinkage;
    doc["trees"] = trees_json(boosted->trees);
  } else {
    const auto& iso = std::get<IsolationForest>(body_);
    doc["subsample"] = iso.subsample;
    doc["normalizer"] = iso.normalizer;
    doc["trees"] = trees_json(iso.trees);
  }
  return doc;
}

Model Model::from_json(const nlohmann::json& doc) {
  LearnerConfig config = LearnerConfig::from_json(doc.at("config"));
  auto names = doc.at("feature_names").get<std::vector<std::string>>();
  auto read_trees = [&] {
    std::vector<Tree> trees;
    for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
    return trees;
  };
  switch (config.kind) {
    case LearnerKind::kLogistic: {
      const auto& lin = doc.at("linear");
      LinearModel m{lin.at("weights").get<std::vector<double>>(), lin.at("intercept").get<double>(),
                    lin.at("center").get<std::vector<double>>(),
                    lin.at("scale").get<std::vector<double>>()};
      if (m.weights.size() != names.size()) throw InvalidArgument("weight count mismatch");
      return Model(config, std::move(names), std::move(m));
    }
    case LearnerKind::kRandomForest:
      return Model(config, std::move(names), Forest{read_trees()});
    case LearnerKind::kGradientBoosting:
      return Model(config, std::move(names),
                   BoostedForest{doc.at("initial_log_odds").get<double>(),
                                 doc.at("shrinkage").get<double>(), read_trees()});
    case LearnerKind::kIsolationForest:
      return Model(config, std::move(names),
                   IsolationForest{read_trees(), doc.at("subsample").get<std::size_t>(),
                                   doc.at("normalizer").get<double>()});
  }
  throw InvalidArgument("unknown model kind");
}

namespace {

// Continuous columns are standardized and stored densely. One-hot columns are
// left as-is and stored as per-row nonzeros, so each pass costs roughly the
// number of continuous features rather than the full encoded width.
struct Standardized {
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<std::size_t> dense_cols;
  std::vector<double> dense;  // n x dense_cols.size(), row-major
  std::vector<std::size_t> sparse_begin;  // n + 1 offsets
  std::vector<std::size_t> sparse_cols;
  std::vector<double> sparse_values;
};

Standardized standardize(const EncodedDataset& data, std::span<const std::size_t> rows) {
  const std::size_t d = data.dimension();
  const std::size_t n = rows.size();
  Standardized s;
  s.center.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  std::vector<std::size_t> sparse_candidates;
  for (std::size_t j = 0; j < d; ++j) {
    if (is_one_hot(data.feature_names[j])) {
      sparse_candidates.push_back(j);
      continue;
    }
    s.dense_cols.push_back(j);
    double mean = 0.0;
    for (std::size_t r : rows) mean += data.matrix(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r : rows) {
      const double dv = data.matrix(r, j) - mean;
      var += dv * dv;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    s.center[j] = mean;
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  const std::size_t k = s.dense_cols.size();
  s.dense.resize(n * k);
  s.sparse_begin.reserve(n + 1);
  s.sparse_begin.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.matrix.row(rows[i]);
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t j = s.dense_cols[c];
      s.dense[i * k + c] = (row[j] - s.center[j]) / s.scale[j];
    }
    for (std::size_t j : sparse_candidates) {
      if (row[j] != 0.0f) {
        s.sparse_cols.push_back(j);
        s.sparse_values.push_back(row[j]);
      }
    }
    s.sparse_begin.push_back(s.sparse_cols.size());
  }
  return s;
}

void margins(const Standardized& s, const std::vector<double>& w, double b, std::vector<double>& out) {
  const std::size_t k = s.dense_cols.size();
  std::vector<double> wd(k);
  for (std::size_t c = 0; c < k; ++c) wd[c] = w[s.dense_cols[c]];
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* zi = s.dense.data() + i * k;
    double m = b;
    for (std::size_t c = 0; c < k; ++c) m += wd[c] * zi[c];
    for (std::size_t p = s.sparse_begin[i]; p < s.sparse_begin[i + 1]; ++p) {
      m += w[s.sparse_cols[p]] * s.sparse_values[p];
    }
    out[i] = m;
  }
}

// Accumulates sum_i residual_i * z_i into grad (which is overwritten).
void gradient(const Standardized& s, const std::vector<double>& residual, std::vector<double>& grad) {
  const std::size_t k = s.dense_cols.size();
  std::vector<double> gd(k, 0.0);
  std::fill(grad.begin(), grad.end(), 0.0);
  for (std::size_t i = 0; i < residual.size(); ++i) {
    const double r = residual[i];
    const double* zi = s.dense.data() + i * k;
    for (std::size_t c = 0; c < k; ++c) gd[c] += r * zi[c];
    for (std::size_t p = s.sparse_begin[i]; p < s.sparse_begin[i + 1]; ++p) {
      grad[s.sparse_cols[p]] += r * s.sparse_values[p];
    }
  }
  for (std::size_t c = 0; c < k; ++c) grad[s.dense_cols[c]] = gd[c];
}

double objective(const std::vector<double>& m, std::span<const std::uint8_t> y,
                 const std::vector<double>& w, double lambda) {
  double loss = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) loss += softplus(m[i]) - (y[i] ? m[i] : 0.0);
  double norm = 0.0;
  for (double v : w) norm += v * v;
  return (loss + 0.5 * lambda * norm) / static_cast<double>(m.size());
}

void check_training_inputs(const EncodedDataset& data, std::span<const std::size_t> rows,
                           std::span<const std::uint8_t> labels) {
  if (rows.empty()) throw InvalidArgument("cannot train on an empty dataset");
  if (rows.size() != labels.size()) throw InvalidArgument("rows and labels differ in length");
  if (data.dimension() == 0) throw InvalidArgument("dataset has no features");
  for (std::size_t r : rows) {
    if (r >= data.size()) throw InvalidArgument("training row out of range");
  }
}

}  // namespace

LogisticFit fit_logistic(const LearnerConfig& config, const EncodedDataset& data,
                         std::span<const std::size_t> rows, std::span<const std::uint8_t> labels) {
  check_training_inputs(data, rows, labels);
  const std::size_t d = data.dimension();
  const std::size_t n = rows.size();
  const Standardized s = standardize(data, rows);

  LogisticFit fit;
  fit.model.center = s.center;
  fit.model.scale = s.scale;
  fit.model.weights.assign(d, 0.0);

  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  if (positives == 0 || positives == n) {
    fit.model.intercept = logit(static_cast<double>(positives) / static_cast<double>(n));
    return fit;
  }

  std::vector<double>& w = fit.model.weights;
  double& b = fit.model.intercept;
  std::vector<double> m(n), m_next(n), w_next(d), grad(d), residual(n);
  margins(s, w, b, m);
  double current = objective(m, labels, w, config.l2_lambda);
  fit.objective_trace.push_back(current);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    double grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = sigmoid(m[i]) - (labels[i] ? 1.0 : 0.0);
      grad_b += residual[i];
    }
    gradient(s, residual, grad);
    const double inv_n = 1.0 / static_cast<double>(n);
    // Gradient step on the data term, exact proximal step on the penalty;
    // halve the step until the full objective does not increase.
    double eta = config.step_size;
    bool accepted = false;
    for (int halvings = 0; halvings < 40 && !accepted; ++halvings, eta *= 0.5) {
      const double shrink = 1.0 + eta * config.l2_lambda * inv_n;
      for (std::size_t j = 0; j < d; ++j) w_next[j] = (w[j] - eta * grad[j] * inv_n) / shrink;
      const double b_next = b - eta * grad_b * inv_n;
      margins(s, w_next, b_next, m_next);
      const double next = objective(m_next, labels, w_next, config.l2_lambda);
      if (next <= current) {
        accepted = true;
        w.swap(w_next);
        m.swap(m_next);
        b = b_next;
        current = next;
      }
    }
    if (!accepted) break;
    fit.objective_trace.push_back(current);
  }
  return fit;
}

double logistic_objective(const LinearModel& model, const EncodedDataset& data,
                          std::span<const std::size_t> rows, std::span<const std::uint8_t> labels,
                          double l2_lambda) {
  check_training_inputs(data, rows, labels);
  const std::size_t d = data.dimension();
  std::vector<double> m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = data.matrix.row(rows[i]);
    double v = model.intercept;
    for (std::size_t j = 0; j < d; ++j) v += model.weights[j] * ((row[j] - model.center[j]) / model.scale[j]);
    m[i] = v;
  }
  return objective(m, labels, model.weights, l2_lambda);
}

Model train(const LearnerConfig& config, const EncodedDataset& data, std::span<const std::size_t> rows,
            std::span<const std::uint8_t> labels) {
  config.validate();
  check_training_inputs(data, rows, labels);
  const std::size_t d = data.dimension();
  const std::size_t n = rows.size();

  switch (config.kind) {
    case LearnerKind::kLogistic:
      return Model(config, data.feature_names, fit_logistic(config, data, rows, labels).model);

    case LearnerKind::kRandomForest: {
      ClassificationParams params;
      params.max_depth = config.max_depth;
      params.max_features = config.max_features != 0
                                ? config.max_features
                                : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
      Forest forest;
      std::vector<std::uint32_t> weights(n);
      for (std::size_t t = 0; t < config.n_estimators; ++t) {
        Rng rng(derive_seed(config.seed, t));
        if (config.bootstrap) {
          std::fill(weights.begin(), weights.end(), 0u);
          for (std::size_t i = 0; i < n; ++i) ++weights[uniform_below(rng, n)];
        } else {
          std::fill(weights.begin(), weights.end(), 1u);
        }
        forest.trees.push_back(build_classification_tree(data.matrix, rows, labels, weights, params, rng));
      }
      return Model(config, data.feature_names, std::move(forest));
    }

    case LearnerKind::kGradientBoosting: {
      BoostedForest boosted;
      boosted.shrinkage = config.shrinkage;
      const auto positives =
          static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
      boosted.initial_log_odds = logit(positives / static_cast<double>(n));
      std::vector<double> score(n, boosted.initial_log_odds), residual(n), hessian(n);
      for (std::size_t t = 0; t < config.n_estimators; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          const double p = std::clamp(sigmoid(score[i]), kProbabilityFloor, 1.0 - kProbabilityFloor);
          residual[i] = (labels[i] ? 1.0 : 0.0) - p;
          hessian[i] = p * (1.0 - p);
        }
        Tree tree = build_regression_tree(data.matrix, rows, residual, hessian, config.max_depth);
        for (std::size_t i = 0; i < n; ++i) {
          score[i] += config.shrinkage * tree.leaf(data.matrix.row(rows[i])).value;
        }
        boosted.trees.push_back(std::move(tree));
      }
      return Model(config, data.feature_names, std::move(boosted));
    }

    case LearnerKind::kIsolationForest: {
      IsolationForest iso;
      iso.subsample = std::min(config.subsample, n);
      iso.normalizer = average_path_length(iso.subsample);
      const auto max_depth = static_cast<std::size_t>(
          std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(iso.subsample, 1)))));
      std::vector<std::size_t> pool(rows.begin(), rows.end());
      for (std::size_t t = 0; t < config.n_estimators; ++t) {
        Rng rng(derive_seed(config.seed, t));
        // Partial Fisher-Yates: the first `subsample` entries become the sample.
        for (std::size_t k = 0; k < iso.subsample; ++k) {
          const std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, n - k));
          std::swap(pool[k], pool[j]);
        }
        iso.trees.push_back(build_isolation_tree(
            data.matrix, std::span<const std::size_t>(pool.data(), iso.subsample), max_depth, rng));
      }
      return Model(config, data.feature_names, std::move(iso));
    }
  }
  throw InvalidArgument("unknown learner kind");
}

Model train(const LearnerConfig& config, const EncodedDataset& data) {
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return train(config, data, rows, data.labels);
}

std::vector<std::pair<std::string, double>> feature_importance(const Model& model) {
  const auto* forest = std::get_if<Forest>(&model.body());
  if (!forest) throw InvalidArgument("feature importance requires a random forest");
  const std::size_t d = model.dimension();
  std::vector<double> total(d, 0.0);
  for (const Tree& t : forest->trees) {
    std::vector<double> per_tree(d, 0.0);
    double sum = 0.0;
    for (const TreeNode& n : t.nodes) {
      if (n.is_leaf()) continue;
      per_tree[static_cast<std::size_t>(n.feature)] += n.gain;
      sum += n.gain;
    }
    if (sum <= 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) total[j] += per_tree[j] / sum;
  }
  double grand = 0.0;
  for (double v : total) grand += v;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    out.emplace_back(model.feature_names()[j], grand > 0.0 ? total[j] / grand : 0.0);
  }
  return out;
}

}  // namespace alnids
