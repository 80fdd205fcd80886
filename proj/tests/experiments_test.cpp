#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "alnids/error.hpp"
#include "alnids/experiments.hpp"
#include "test_support.hpp"

using namespace alnids;
namespace fs = std::filesystem;

namespace {

DatasetCatalog small_catalog() {
  return DatasetCatalog::from_records(alnids::testing::small_corpus({"normal.", "back.", "pod."}, 0.05), 11, 0,
                                      10);
}

ExperimentConfig small_experiment(const fs::path& out = {}) {
  ExperimentConfig c;
  c.learners = {"rf"};
  c.strategies = {"entropy"};
  c.seeds = {0};
  c.loop.n_seed = 40;
  c.loop.budget = 10;
  c.loop.checkpoints = {5, 10};
  c.output_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("alnids_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Catalog, ResolvesNamesAndRejectsUnknownOnes) {
  const auto cat = small_catalog();
  EXPECT_EQ(cat.names(), (std::vector<std::string>{"back.", "pod."}));
  EXPECT_EQ(cat.resolve({}), cat.names());
  EXPECT_EQ(cat.resolve({"pod", "pod."}), (std::vector<std::string>{"pod."}));
  EXPECT_THROW(cat.resolve({"smurf"}), InvalidArgument);
  EXPECT_THROW(cat.load("smurf"), InvalidArgument);
  const DatasetCatalog empty({}, [](const std::string&) { return PreparedDataset{}; });
  EXPECT_THROW(empty.resolve({}), InvalidArgument);
}

TEST(Catalog, RowCapKeepsBothClasses) {
  auto records = alnids::testing::small_corpus({"normal.", "back."}, 0.05);
  const auto ds = build_attack_datasets(records, 10).front();
  const auto capped = cap_rows(ds, 500, 3);
  EXPECT_EQ(capped.size(), 500u);
  EXPECT_GT(capped.attacks, 0u);
  EXPECT_EQ(capped.attacks + capped.normals, 500u);
  EXPECT_TRUE(std::is_sorted(capped.rows.begin(), capped.rows.end()));
  EXPECT_EQ(cap_rows(ds, 500, 3).rows, capped.rows);
  EXPECT_EQ(cap_rows(ds, 0, 3).rows, ds.rows);
}

TEST(LearnerSpec, Names) {
  EXPECT_TRUE(std::holds_alternative<EnsembleRecipe>(learner_spec("ensemble")));
  EXPECT_EQ(std::get<LearnerConfig>(learner_spec("lr")).kind, LearnerKind::kLogistic);
  EXPECT_THROW(learner_spec("if"), InvalidArgument);
  EXPECT_THROW(learner_spec("knn"), InvalidArgument);
}

TEST(Grid, SingleCellGivesOneRow) {
  const auto cat = small_catalog();
  auto c = small_experiment();
  c.attacks = {"back"};
  const GridResult r = cmd_grid(cat, c);
  ASSERT_EQ(r.table.rows.size(), 1u);
  EXPECT_EQ(r.table.rows[0].key, "rf/entropy");
  EXPECT_EQ(r.table.columns, (std::vector<std::string>{"F1 initial", "F1 after 5", "F1 after 10"}));
  ASSERT_EQ(r.runs.size(), 1u);
  EXPECT_EQ(r.runs[0].trace.events.size(), 10u);
  EXPECT_DOUBLE_EQ(r.table.rows[0].values[2].mean, r.runs[0].trace.f1_after(10));
  EXPECT_DOUBLE_EQ(r.table.rows[0].values[2].std, 0.0);
}

TEST(Grid, RejectsBadCellsBeforeRunning) {
  const auto cat = small_catalog();
  auto c = small_experiment();
  c.strategies = {"entropy", "bogus"};
  EXPECT_THROW(cmd_grid(cat, c), InvalidArgument);
  c = small_experiment();
  c.learners = {"if"};
  EXPECT_THROW(cmd_grid(cat, c), InvalidArgument);
  c = small_experiment();
  c.attacks = {"teardrop"};
  EXPECT_THROW(cmd_grid(cat, c), InvalidArgument);
  c = small_experiment();
  c.seeds = {};
  EXPECT_THROW(cmd_grid(cat, c), InvalidArgument);
}

TEST(Grid, OutputsAreByteIdenticalAcrossReruns) {
  TempDir a("grid_a"), b("grid_b");
  const auto cat = small_catalog();
  auto ca = small_experiment(a.path);
  ca.seeds = {0, 1};
  auto cb = ca;
  cb.output_dir = b.path;
  cmd_grid(cat, ca);
  cmd_grid(cat, cb);
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a.path / "grid")) {
    if (!entry.is_regular_file() || entry.path().filename() == "timing.csv") continue;
    const auto rel = fs::relative(entry.path(), a.path);
    ASSERT_TRUE(fs::exists(b.path / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(b.path / rel)) << rel;
    ++compared;
  }
  // table.{txt,csv,json}, one curve file and 2 attacks x 2 seeds traces.
  EXPECT_EQ(compared, 3u + 1u + 4u);
  EXPECT_TRUE(fs::exists(a.path / "grid" / "timing.csv"));
  EXPECT_TRUE(fs::exists(a.path / "grid" / "traces" / "pod__rf__entropy__seed1.jsonl"));
}

TEST(UnsupSampling, ComparesEntropyWithIsolation) {
  const auto cat = small_catalog();
  auto c = small_experiment();
  c.attacks = {"pod"};
  const GridResult r = cmd_unsup_sampling(cat, c);
  ASSERT_EQ(r.table.rows.size(), 2u);
  EXPECT_EQ(r.table.rows[0].key, "rf/entropy");
  EXPECT_EQ(r.table.rows[1].key, "rf/isolation");
  for (const auto& run : r.runs) EXPECT_EQ(run.isolation_cache_builds, run.strategy == "isolation" ? 1u : 0u);
}

TEST(BaselineOracle, OneRowPerAttackPlusMean) {
  const auto cat = small_catalog();
  auto c = small_experiment();
  c.seeds = {0, 1};
  const auto r = cmd_baseline_oracle(cat, c);
  ASSERT_EQ(r.rows.size(), 2u);
  ASSERT_EQ(r.table.rows.size(), 3u);
  EXPECT_EQ(r.table.rows.back().key, "mean");
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.oracle_f1.size(), 2u);
    for (double f : row.oracle_f1) EXPECT_GT(f, 0.5);
  }
  EXPECT_NEAR(r.oracle().mean, (aggregate(r.rows[0].oracle_f1).mean + aggregate(r.rows[1].oracle_f1).mean) / 2,
              1e-12);
}

TEST(ZScoreReport, UsesTheSeedModel) {
  const auto cat = small_catalog();
  auto c = small_experiment();
  c.seeds = {0, 1, 2};
  c.loop.n_seed = 60;
  const auto r = cmd_zscore_report(cat, "back", c);
  EXPECT_EQ(r.attack, "back.");
  ASSERT_EQ(r.runs.size(), 3u);
  bool any_defined = false;
  for (const auto& run : r.runs) {
    EXPECT_EQ(run.report.features.size(), cat.load("back").splits.dev.dimension());
    any_defined = any_defined || (run.report.true_positives >= 2 &&
                                  run.report.false_positives + run.report.false_negatives > 0);
  }
  // Ranked rows exist exactly when some run has a defined report.
  EXPECT_EQ(r.table.rows.empty(), !any_defined);
}

TEST(Prepare, WritesAnIndexAndIsReproducible) {
  TempDir a("prep_a"), b("prep_b");
  const auto cat = small_catalog();
  prepare_catalog(cat, a.path);
  prepare_catalog(small_catalog(), b.path);
  for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a.path);
    ASSERT_EQ(slurp(entry.path()), slurp(b.path / rel)) << rel;
  }
  const auto loaded = DatasetCatalog::from_directory(a.path);
  EXPECT_EQ(loaded.names(), cat.names());
  const auto p = loaded.load("pod");
  const auto q = cat.load("pod");
  EXPECT_EQ(p.splits.train.labels, q.splits.train.labels);
  EXPECT_EQ(p.splits.test.matrix, q.splits.test.matrix);
  EXPECT_THROW(DatasetCatalog::from_directory(a.path / "nope"), InvalidArgument);
}

TEST(ResultTable, Formats) {
  ResultTable t{"T", "k", {"a", "b"}, {{"x", {{0.5, 0.25}, {1.0, 0.0}}, true}, {"y", {{0.125, 0}, {0, 0}}, false}}};
  EXPECT_EQ(t.to_csv(), "k,a mean,a std,b mean,b std\nx,0.5000,0.2500,1.0000,0.0000\ny,0.1250,,0.0000,\n");
  EXPECT_NE(t.to_text().find("0.5000 ± 0.2500"), std::string::npos);
  EXPECT_EQ(t.to_json().at("schema_version"), 1);
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.row("z"), InvalidArgument);
}
