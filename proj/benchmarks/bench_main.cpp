#include <benchmark/benchmark.h>

#include <memory>
#include <numeric>

#include "alnids/dataset.hpp"
#include "alnids/learners.hpp"
#include "alnids/sampling.hpp"
#include "alnids/synthetic.hpp"

using namespace alnids;

namespace {

// Normal traffic plus smurf at 5% of the 10% subset (~24k rows).
const Splits& data() {
  static const Splits splits = [] {
    SyntheticOptions o;
    o.scale = 0.05;
    o.labels = {"normal.", "smurf."};
    auto records = std::make_shared<const std::vector<RawRecord>>(generate_kdd_like(o));
    auto ds = build_attack_datasets(records, 1).front();
    return split(encode(ds).data, 0);
  }();
  return splits;
}

std::vector<std::size_t> first_rows(std::size_t n) {
  std::vector<std::size_t> rows(std::min(n, data().train.size()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

void train_learner(benchmark::State& state, LearnerKind kind) {
  const auto rows = first_rows(static_cast<std::size_t>(state.range(0)));
  std::vector<std::uint8_t> labels;
  for (auto r : rows) labels.push_back(data().train.labels[r]);
  const LearnerConfig config = LearnerConfig::defaults(kind);
  for (auto _ : state) benchmark::DoNotOptimize(train(config, data().train, rows, labels));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}

void BM_TrainRandomForest(benchmark::State& s) { train_learner(s, LearnerKind::kRandomForest); }
void BM_TrainLogistic(benchmark::State& s) { train_learner(s, LearnerKind::kLogistic); }
void BM_TrainGradientBoosting(benchmark::State& s) { train_learner(s, LearnerKind::kGradientBoosting); }
void BM_TrainIsolationForest(benchmark::State& s) { train_learner(s, LearnerKind::kIsolationForest); }

// One entropy query over the whole training pool with a seed-set forest.
void BM_EntropyQuery(benchmark::State& state) {
  const auto seed_rows = first_rows(1000);
  std::vector<std::uint8_t> labels;
  for (auto r : seed_rows) labels.push_back(data().train.labels[r]);
  const Model model = train(LearnerConfig::random_forest(), data().train, seed_rows, labels);
  std::vector<std::size_t> rest(data().train.size() - seed_rows.size());
  std::iota(rest.begin(), rest.end(), seed_rows.size());
  const Pool pool(data().train.matrix, rest);
  Rng rng(0);
  for (auto _ : state) benchmark::DoNotOptimize(select_entropy(model, pool, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pool.size()));
}

void BM_IsolationScoring(benchmark::State& state) {
  const Model model = train(LearnerConfig::isolation_forest(), data().train);
  const auto rows = first_rows(data().train.size());
  for (auto _ : state) benchmark::DoNotOptimize(model.anomaly_scores(data().train.matrix, rows));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows.size()));
}

}  // namespace

BENCHMARK(BM_TrainRandomForest)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainLogistic)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainGradientBoosting)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainIsolationForest)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EntropyQuery)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_IsolationScoring)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
