#include <gtest/gtest.h>

#include <array>
#include <random>

#include "alnids/ensemble.hpp"
#include "alnids/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace alnids;
using alnids::testing::make_encoded;

TEST(WeightedVote, MatchesDirectSumOverAllVotePatterns) {
  EXPECT_EQ(oracles::vote_mismatches(3, 100), 0u);
}

TEST(WeightedVote, EqualWeightTieIsNormal) {
  const std::array<double, 4> weights = {1, 1, 1, 1};
  const std::array<std::uint8_t, 4> two = {1, 1, 0, 0};
  const std::array<std::uint8_t, 4> three = {1, 1, 1, 0};
  EXPECT_EQ(weighted_vote(two, weights), 0);
  EXPECT_EQ(weighted_vote(three, weights), 1);
}

TEST(WeightedVote, RejectsBadWeights) {
  const std::array<std::uint8_t, 2> votes = {1, 0};
  const std::array<double, 2> zeros = {0, 0};
  const std::array<double, 1> short_weights = {1};
  EXPECT_THROW(weighted_vote(votes, zeros), InvalidArgument);
  EXPECT_THROW(weighted_vote(votes, short_weights), InvalidArgument);
}

TEST(EnsembleRecipe, DefaultHasFourEqualMembers) {
  const auto r = EnsembleRecipe::paper_default(5);
  ASSERT_EQ(r.entries.size(), 4u);
  EXPECT_EQ(r.entries[0].config.kind, LearnerKind::kRandomForest);
  EXPECT_EQ(r.entries[1].config.kind, LearnerKind::kGradientBoosting);
  EXPECT_EQ(r.entries[2].config.kind, LearnerKind::kLogistic);
  EXPECT_EQ(r.entries[3].config.kind, LearnerKind::kIsolationForest);
  for (const auto& e : r.entries) EXPECT_DOUBLE_EQ(e.weight, 1.0);
  EXPECT_EQ(EnsembleRecipe::from_json(r.to_json()).to_json(), r.to_json());
}

TEST(EnsembleRecipe, Validation) {
  EnsembleRecipe empty;
  EXPECT_THROW(empty.validate(), InvalidArgument);
  auto r = EnsembleRecipe::paper_default(0);
  r.entries[0].weight = -1;
  EXPECT_THROW(r.validate(), InvalidArgument);
  for (auto& e : r.entries) e.weight = 0;
  EXPECT_THROW(r.validate(), InvalidArgument);
}

TEST(EnsembleModel, AgreesWithTheVoteRule) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::vector<float>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 400; ++i) {
    const std::uint8_t y = i % 4 == 0;
    rows.push_back({static_cast<float>(noise(gen) + 1.5 * y), static_cast<float>(noise(gen) - y)});
    labels.push_back(y);
  }
  const auto d = make_encoded(rows, labels);
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto recipe = EnsembleRecipe::paper_default(1);
  recipe.entries[2].weight = 2.5;
  const EnsembleSpec spec = train_ensemble(recipe, d, idx, d.labels);
  const EnsembleModel model(spec);
  EXPECT_EQ(model.dimension(), 2u);
  const std::array<double, 4> weights = {1, 1, 2.5, 1};
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto row = d.matrix.row(r);
    const auto votes = member_votes(spec, row);
    ASSERT_EQ(votes.size(), 4u);
    const std::uint8_t expected = weighted_vote(votes, weights);
    ASSERT_EQ(ensemble_classify(spec, row), expected);
    ASSERT_EQ(model.classify(row), expected);
    double frac = 0.0;
    for (std::size_t e = 0; e < 4; ++e) frac += votes[e] * weights[e];
    ASSERT_NEAR(model.predict_proba(row), frac / 5.5, 1e-12);
    const double score = spec.members[3].model.anomaly_score(row);
    ASSERT_EQ(votes[3], score > 0.5 ? 1 : 0);
  }
}
