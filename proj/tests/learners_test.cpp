#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "alnids/error.hpp"
#include "alnids/learners.hpp"
#include "alnids/metrics.hpp"
#include "test_support.hpp"

using namespace alnids;
using alnids::testing::make_encoded;

namespace {

EncodedDataset noisy_blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t y = i % 3 == 0 ? 1 : 0;
    rows.push_back({static_cast<float>(noise(gen) + (y ? 2.5 : 0.0)), static_cast<float>(noise(gen) * 10),
                    static_cast<float>(noise(gen) + (y ? -1.0 : 0.0))});
    labels.push_back(y);
  }
  return make_encoded(rows, labels);
}

}  // namespace

TEST(LearnerKind, ParsesShortAndLongNames) {
  EXPECT_EQ(parse_learner_kind("lr"), LearnerKind::kLogistic);
  EXPECT_EQ(parse_learner_kind("rf"), LearnerKind::kRandomForest);
  EXPECT_EQ(parse_learner_kind("gb"), LearnerKind::kGradientBoosting);
  EXPECT_EQ(parse_learner_kind("if"), LearnerKind::kIsolationForest);
  EXPECT_EQ(parse_learner_kind(to_string(LearnerKind::kGradientBoosting)), LearnerKind::kGradientBoosting);
  EXPECT_THROW(parse_learner_kind("svm"), InvalidArgument);
}

TEST(LearnerConfig, ValidationAndJson) {
  LearnerConfig c = LearnerConfig::random_forest();
  c.n_estimators = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  LearnerConfig l = LearnerConfig::logistic();
  l.l2_lambda = -1;
  EXPECT_THROW(l.validate(), InvalidArgument);
  const LearnerConfig g = LearnerConfig::gradient_boosting();
  EXPECT_EQ(g.max_depth, 3u);
  EXPECT_EQ(LearnerConfig::from_json(g.to_json()).to_json(), g.to_json());
}

TEST(Train, EmptyDataIsAnError) {
  const auto d = make_encoded({{1.0f}}, {1});
  const std::vector<std::size_t> rows;
  const std::vector<std::uint8_t> labels;
  EXPECT_THROW(train(LearnerConfig::random_forest(), d, rows, labels), InvalidArgument);
}

TEST(Train, SingleClassPredictsThePrior) {
  const auto d = make_encoded({{1, 2}, {3, 4}, {5, 6}, {7, 1}}, {0, 0, 0, 0});
  for (auto kind : {LearnerKind::kLogistic, LearnerKind::kRandomForest, LearnerKind::kGradientBoosting}) {
    const Model m = train(LearnerConfig::defaults(kind), d);
    for (std::size_t r = 0; r < d.size(); ++r) {
      EXPECT_LE(m.predict_proba(d.matrix.row(r)), 0.5) << to_string(kind);
      EXPECT_EQ(m.classify(d.matrix.row(r)), 0) << to_string(kind);
    }
    const std::vector<float> far = {1000, -1000};
    EXPECT_EQ(m.classify(far), 0);
  }
}

TEST(Predict, DimensionMismatchIsAnError) {
  const auto d = noisy_blobs(60, 1);
  const Model m = train(LearnerConfig::random_forest(), d);
  const std::vector<float> row = {1, 2};
  EXPECT_THROW(m.predict_proba(row), InvalidArgument);
}

TEST(Predict, ClassifyUsesStrictThreshold) {
  const LinearModel lin{{0.0}, 0.0, {0.0}, {1.0}};
  const Model m(LearnerConfig::logistic(), {"x0"}, lin);
  const std::vector<float> row = {3.0f};
  EXPECT_DOUBLE_EQ(m.predict_proba(row), 0.5);
  EXPECT_EQ(m.classify(row), 0);
  EXPECT_EQ(m.classify(row, 0.49), 1);
  EXPECT_EQ(m.classify(row, 0.51), 0);
}

TEST(Logistic, SeparableSetIsFitPerfectly) {
  // Two clusters split by the line x0 + x1 = 0 with a margin of at least 1.
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = -5; i <= 5; ++i) {
    for (int j = -5; j <= 5; ++j) {
      if (std::abs(i + j) < 2) continue;
      rows.push_back({static_cast<float>(i), static_cast<float>(j)});
      labels.push_back(i + j > 0 ? 1 : 0);
    }
  }
  const auto d = make_encoded(rows, labels);
  const Model m = train(LearnerConfig::logistic(), d);
  const auto preds = m.classify_all(d.matrix);
  EXPECT_DOUBLE_EQ(f1(confusion(preds, d.labels)), 1.0);
}

TEST(Logistic, ObjectiveNeverIncreases) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = noisy_blobs(300, seed);
    std::vector<std::size_t> rows(d.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (double lambda : {0.0, 1.0, 50.0}) {
      LearnerConfig c = LearnerConfig::logistic();
      c.l2_lambda = lambda;
      const LogisticFit fit = fit_logistic(c, d, rows, d.labels);
      ASSERT_GE(fit.objective_trace.size(), 2u);
      for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        ASSERT_LE(fit.objective_trace[i], fit.objective_trace[i - 1]) << "iteration " << i;
      }
      EXPECT_NEAR(logistic_objective(fit.model, d, rows, d.labels, lambda), fit.objective_trace.back(), 1e-9);
    }
  }
}

TEST(Logistic, HeavyPenaltyLeavesOnlyTheIntercept) {
  const auto d = noisy_blobs(300, 11);
  LearnerConfig c = LearnerConfig::logistic();
  c.l2_lambda = 1e6;
  const Model m = train(c, d);
  const auto& lin = std::get<LinearModel>(m.body());
  for (double w : lin.weights) EXPECT_LT(std::abs(w), 1e-3);
  const double rate = static_cast<double>(d.positives()) / static_cast<double>(d.size());
  EXPECT_NEAR(m.predict_proba(d.matrix.row(0)), rate, 1e-2);
}

TEST(RandomForest, ExactTreeCountAndDeterminism) {
  const auto d = noisy_blobs(400, 2);
  LearnerConfig c = LearnerConfig::random_forest();
  c.seed = 17;
  const Model a = train(c, d);
  const Model b = train(c, d);
  EXPECT_EQ(std::get<Forest>(a.body()).trees.size(), 10u);
  EXPECT_EQ(a.to_json(), b.to_json());
  for (std::size_t r = 0; r < d.size(); ++r) {
    ASSERT_EQ(a.predict_proba(d.matrix.row(r)), b.predict_proba(d.matrix.row(r)));
  }
  c.seed = 18;
  EXPECT_NE(train(c, d).to_json(), a.to_json());
}

TEST(RandomForest, UnanimousPureLeavesGiveHighProbability) {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 200; ++i) {
    rows.push_back({static_cast<float>(i < 100 ? i : 1000 + i)});
    labels.push_back(i < 100 ? 0 : 1);
  }
  const auto d = make_encoded(rows, labels);
  const Model m = train(LearnerConfig::random_forest(), d);
  const std::vector<float> attack = {5000.0f};
  EXPECT_GE(m.predict_proba(attack), 0.9);
  EXPECT_LT(m.predict_proba(attack), 1.0);
}

TEST(RandomForest, ModelJsonRoundTrip) {
  const auto d = noisy_blobs(200, 9);
  for (auto kind : {LearnerKind::kLogistic, LearnerKind::kRandomForest, LearnerKind::kGradientBoosting,
                    LearnerKind::kIsolationForest}) {
    const Model m = train(LearnerConfig::defaults(kind), d);
    const Model back = Model::from_json(m.to_json());
    for (std::size_t r = 0; r < d.size(); r += 7) {
      if (kind == LearnerKind::kIsolationForest) {
        ASSERT_EQ(back.anomaly_score(d.matrix.row(r)), m.anomaly_score(d.matrix.row(r)));
      } else {
        ASSERT_EQ(back.predict_proba(d.matrix.row(r)), m.predict_proba(d.matrix.row(r)));
      }
    }
  }
}

TEST(FeatureImportance, SumsToOneAndFindsTheSignal) {
  const auto d = noisy_blobs(500, 4);
  const Model m = train(LearnerConfig::random_forest(), d);
  const auto imp = feature_importance(m);
  double sum = 0.0;
  for (const auto& [name, v] : imp) {
    EXPECT_GE(v, 0.0);
    sum += v;
  }
  EXPECT_NEAR(sum, 1.0, 1e-9);
  const auto top = std::max_element(imp.begin(), imp.end(), [](auto& a, auto& b) { return a.second < b.second; });
  EXPECT_EQ(top->first, "x0");
}

TEST(FeatureImportance, SingleInformativeFeatureGetsEverything) {
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({7.0f, static_cast<float>(i), 3.0f});
    labels.push_back(i >= 50 ? 1 : 0);
  }
  const auto d = make_encoded(rows, labels);
  const auto imp = feature_importance(train(LearnerConfig::random_forest(), d));
  EXPECT_DOUBLE_EQ(imp[0].second, 0.0);
  EXPECT_DOUBLE_EQ(imp[1].second, 1.0);
  EXPECT_DOUBLE_EQ(imp[2].second, 0.0);
}

TEST(FeatureImportance, OnlyForRandomForests) {
  const auto d = noisy_blobs(100, 4);
  EXPECT_THROW(feature_importance(train(LearnerConfig::logistic(), d)), InvalidArgument);
}

TEST(GradientBoosting, WithoutTreesPredictsTheTrainingRate) {
  BoostedForest body;
  body.initial_log_odds = std::log(0.25 / 0.75);
  const Model m(LearnerConfig::gradient_boosting(), {"x0"}, body);
  const std::vector<float> row = {1.0f};
  EXPECT_NEAR(m.predict_proba(row), 0.25, 1e-12);
}

TEST(GradientBoosting, LearnsNoisyBlobs) {
  const auto d = noisy_blobs(600, 6);
  const Model m = train(LearnerConfig::gradient_boosting(), d);
  EXPECT_EQ(std::get<BoostedForest>(m.body()).trees.size(), 10u);
  EXPECT_GT(f1(confusion(m.classify_all(d.matrix), d.labels)), 0.8);
}

TEST(IsolationForest, ScoreAtTheNormalizerIsOneHalf) {
  IsolationForest iso;
  iso.subsample = 256;
  iso.normalizer = average_path_length(256);
  // A single tree whose root is a leaf holding 256 rows: E[h] = c(256).
  Tree t;
  TreeNode leaf;
  leaf.weight = 256;
  leaf.value = average_path_length(256);
  t.nodes.push_back(leaf);
  iso.trees.push_back(t);
  const Model m(LearnerConfig::isolation_forest(), {"x0"}, iso);
  const std::vector<float> row = {0.0f};
  EXPECT_DOUBLE_EQ(m.anomaly_score(row), 0.5);
  EXPECT_EQ(m.classify(row), 0);
  EXPECT_THROW(m.predict_proba(row), InvalidArgument);
}

TEST(IsolationForest, IsolatesAFarOutlier) {
  std::size_t wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<float>> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back({static_cast<float>(noise(gen))});
    rows.push_back({1e6f});
    const auto d = make_encoded(rows, std::vector<std::uint8_t>(rows.size(), 0));
    LearnerConfig c = LearnerConfig::isolation_forest();
    c.seed = seed;
    const Model m = train(c, d);
    std::vector<double> inliers;
    for (std::size_t r = 0; r < 1000; ++r) inliers.push_back(m.anomaly_score(d.matrix.row(r)));
    std::nth_element(inliers.begin(), inliers.begin() + 500, inliers.end());
    if (m.anomaly_score(d.matrix.row(1000)) > inliers[500]) ++wins;
  }
  EXPECT_GE(wins, 95u);
}

TEST(IsolationForest, ScoresStayInsideTheUnitInterval) {
  const auto d = noisy_blobs(500, 3);
  const Model m = train(LearnerConfig::isolation_forest(), d);
  for (std::size_t r = 0; r < d.size(); ++r) {
    const double s = m.anomaly_score(d.matrix.row(r));
    ASSERT_GT(s, 0.0);
    ASSERT_LT(s, 1.0);
  }
  // Deeper average isolation means a strictly smaller score.
  const auto& iso = std::get<IsolationForest>(m.body());
  for (std::size_t r = 0; r + 1 < d.size(); ++r) {
    const double ha = m.mean_path_length(d.matrix.row(r)), hb = m.mean_path_length(d.matrix.row(r + 1));
    const double sa = m.anomaly_score(d.matrix.row(r)), sb = m.anomaly_score(d.matrix.row(r + 1));
    if (ha > hb) {
      ASSERT_LT(sa, sb);
    } else if (ha < hb) {
      ASSERT_GT(sa, sb);
    }
  }
  EXPECT_EQ(iso.subsample, 256u);
  EXPECT_EQ(iso.trees.size(), 10u);
  for (const auto& t : iso.trees) EXPECT_LE(t.max_depth(), 8u);
}
