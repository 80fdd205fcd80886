#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace alnids {

struct EncodedDataset;
struct ProbabilisticClassifier;

// Confusion counts with the attack class as positive.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> truths);

// Any vanishing denominator yields 0.
double precision(const Confusion& c);
double recall(const Confusion& c);
double f1(const Confusion& c);

struct MetricsSnapshot {
  Confusion confusion;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

MetricsSnapshot snapshot(const Confusion& c);
MetricsSnapshot evaluate(const ProbabilisticClassifier& model, const EncodedDataset& data);

nlohmann::json to_json(const MetricsSnapshot& m);
MetricsSnapshot snapshot_from_json(const nlohmann::json& doc);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Arithmetic mean and sample (n-1) standard deviation; a single value has std 0.
MeanStd aggregate(std::span<const double> values);

// Per-feature separation between correctly detected attacks and mispredictions:
//   z = |mean_tp - mean_wrong| / std_tp
// where "wrong" is the union of false positives and false negatives.
struct FeatureZ {
  std::string feature;
  // Empty when undefined (fewer than two true positives or no mispredictions).
  // +inf when std_tp is 0 and the means differ.
  std::optional<double> z;
  double mean_tp = 0.0;
  double std_tp = 0.0;
  double mean_wrong = 0.0;
  double mean_fp = 0.0;
  double mean_fn = 0.0;
};

struct ZScoreReport {
  std::vector<FeatureZ> features;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  const FeatureZ& at(const std::string& feature) const;
  // Finite z values sorted descending.
  std::vector<const FeatureZ*> ranked() const;
};

ZScoreReport feature_z_scores(std::span<const std::uint8_t> predictions, const EncodedDataset& data);
ZScoreReport feature_z_scores(const ProbabilisticClassifier& model, const EncodedDataset& data);

nlohmann::json to_json(const ZScoreReport& report);

}  // namespace alnids
