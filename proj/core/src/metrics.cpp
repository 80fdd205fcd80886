#include "alnids/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "alnids/dataset.hpp"
#include "alnids/error.hpp"
#include "alnids/learners.hpp"

namespace alnids {

Confusion confusion(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> truths) {
  if (predictions.size() != truths.size()) {
    throw InvalidArgument("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                          std::to_string(truths.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] != 0;
    const bool t = truths[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double precision(const Confusion& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const Confusion& c) { return ratio(c.tp, c.tp + c.fn); }

double f1(const Confusion& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MetricsSnapshot snapshot(const Confusion& c) { return {c, precision(c), recall(c), f1(c)}; }

MetricsSnapshot evaluate(const ProbabilisticClassifier& model, const EncodedDataset& data) {
  const auto predictions = model.classify_all(data.matrix);
  return snapshot(confusion(predictions, data.labels));
}

nlohmann::json to_json(const MetricsSnapshot& m) {
  return {{"tp", m.confusion.tp},   {"fp", m.confusion.fp},     {"fn", m.confusion.fn},
          {"tn", m.confusion.tn},   {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1}};
}

MetricsSnapshot snapshot_from_json(const nlohmann::json& doc) {
  Confusion c;
  c.tp = doc.at("tp").get<std::size_t>();
  c.fp = doc.at("fp").get<std::size_t>();
  c.fn = doc.at("fn").get<std::size_t>();
  c.tn = doc.at("tn").get<std::size_t>();
  return snapshot(c);
}

MeanStd aggregate(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("aggregate: no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  // Identical values: report them exactly rather than a rounded sum.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
    return {values.front(), 0.0};
  }
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

const FeatureZ& ZScoreReport::at(const std::string& feature) const {
  for (const auto& f : features) {
    if (f.feature == feature) return f;
  }
  throw InvalidArgument("no z-score for feature '" + feature + "'");
}

std::vector<const FeatureZ*> ZScoreReport::ranked() const {
  std::vector<const FeatureZ*> out;
  for (const auto& f : features) {
    if (f.z && std::isfinite(*f.z)) out.push_back(&f);
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureZ* a, const FeatureZ* b) { return *a->z > *b->z; });
  return out;
}

ZScoreReport feature_z_scores(std::span<const std::uint8_t> predictions, const EncodedDataset& data) {
  if (predictions.size() != data.size()) throw InvalidArgument("feature_z_scores: size mismatch");
  const std::size_t d = data.dimension();
  std::vector<double> sum_tp(d, 0.0), sq_tp(d, 0.0), sum_fp(d, 0.0), sum_fn(d, 0.0);
  ZScoreReport report;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const bool p = predictions[r] != 0;
    const bool t = data.labels[r] != 0;
    std::vector<double>* target = nullptr;
    if (p && t) {
      ++report.true_positives;
      target = &sum_tp;
    } else if (p) {
      ++report.false_positives;
      target = &sum_fp;
    } else if (t) {
      ++report.false_negatives;
      target = &sum_fn;
    } else {
      continue;
    }
    const auto row = data.matrix.row(r);
    for (std::size_t c = 0; c < d; ++c) (*target)[c] += row[c];
  }
  // Second pass for the true-positive spread; a column whose values are all
  // identical gets exactly zero regardless of rounding in the mean.
  std::vector<float> lo(d, std::numeric_limits<float>::infinity());
  std::vector<float> hi(d, -std::numeric_limits<float>::infinity());
  if (report.true_positives > 0) {
    const auto n = static_cast<double>(report.true_positives);
    for (std::size_t r = 0; r < data.size(); ++r) {
      if (!predictions[r] || !data.labels[r]) continue;
      const auto row = data.matrix.row(r);
      for (std::size_t c = 0; c < d; ++c) {
        const double dev = row[c] - sum_tp[c] / n;
        sq_tp[c] += dev * dev;
        lo[c] = std::min(lo[c], row[c]);
        hi[c] = std::max(hi[c], row[c]);
      }
    }
  }

  const std::size_t n_tp = report.true_positives;
  const std::size_t n_wrong = report.false_positives + report.false_negatives;
  const bool defined = n_tp >= 2 && n_wrong > 0;
  report.features.reserve(d);
  for (std::size_t c = 0; c < d; ++c) {
    FeatureZ fz;
    fz.feature = data.feature_names[c];
    if (n_tp > 0) {
      fz.mean_tp = sum_tp[c] / static_cast<double>(n_tp);
      // Population standard deviation of the true-positive values.
      fz.std_tp = lo[c] == hi[c] ? 0.0 : std::sqrt(sq_tp[c] / static_cast<double>(n_tp));
      if (lo[c] == hi[c]) fz.mean_tp = lo[c];
    }
    if (report.false_positives > 0) fz.mean_fp = sum_fp[c] / static_cast<double>(report.false_positives);
    if (report.false_negatives > 0) fz.mean_fn = sum_fn[c] / static_cast<double>(report.false_negatives);
    if (n_wrong > 0) fz.mean_wrong = (sum_fp[c] + sum_fn[c]) / static_cast<double>(n_wrong);
    if (defined) {
      const double gap = std::abs(fz.mean_tp - fz.mean_wrong);
      if (fz.std_tp == 0.0) {
        fz.z = gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        fz.z = gap / fz.std_tp;
      }
    }
    report.features.push_back(std::move(fz));
  }
  return report;
}

ZScoreReport feature_z_scores(const ProbabilisticClassifier& model, const EncodedDataset& data) {
  if (data.size() == 0) throw InvalidArgument("feature_z_scores: empty dataset");
  return feature_z_scores(model.classify_all(data.matrix), data);
}

nlohmann::json to_json(const ZScoreReport& report) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : report.features) {
    nlohmann::json z;
    if (!f.z) z = nullptr;
    else if (std::isinf(*f.z)) z = "inf";
    else z = *f.z;
    features.push_back({{"feature", f.feature},
                        {"z", z},
                        {"mean_tp", f.mean_tp},
                        {"std_tp", f.std_tp},
                        {"mean_wrong", f.mean_wrong},
                        {"mean_fp", f.mean_fp},
                        {"mean_fn", f.mean_fn}});
  }
  return {{"schema_version", 1},
          {"true_positives", report.true_positives},
          {"false_positives", report.false_positives},
          {"false_negatives", report.false_negatives},
          {"features", features}};
}

}  // namespace alnids
