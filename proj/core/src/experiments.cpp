#include "alnids/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "alnids/ensemble.hpp"
#include "alnids/error.hpp"
#include "alnids/learners.hpp"
#include "alnids/random.hpp"

namespace alnids {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kCapStream = 0xC0;
constexpr std::uint64_t kBaselineStream = 0xB1;
constexpr std::uint64_t kOracleStream = 0xB2;

std::string canonical_label(const std::string& name) {
  return !name.empty() && name.back() == '.' ? name : name + ".";
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string format_cell(const MeanStd& v, bool show_std) {
  if (!show_std) return format_number(v.mean);
  return format_number(v.mean) + " ± " + format_number(v.std);
}

// Display width counting UTF-8 code points.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

void pad_to(std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  if (w < width) s.append(width - w, ' ');
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

double mean_of(const std::vector<double>& v) {
  return aggregate(std::span<const double>(v)).mean;
}

void report(const ProgressFn& progress, const std::string& message) {
  if (progress) progress(message);
}

void write_table(const fs::path& dir, const std::string& stem, const ResultTable& table) {
  write_file(dir / (stem + ".txt"), table.to_text());
  write_file(dir / (stem + ".csv"), table.to_csv());
  write_file(dir / (stem + ".json"), table.to_json().dump(2) + "\n");
}

std::string run_stem(const RunRecord& r) {
  return dataset_name(r.attack) + "__" + r.learner + "__" + r.strategy + "__seed" + std::to_string(r.seed);
}

std::vector<std::string> checkpoint_columns(const std::vector<std::size_t>& checkpoints) {
  std::vector<std::string> cols;
  for (std::size_t c : checkpoints) cols.push_back(c == 0 ? "F1 initial" : "F1 after " + std::to_string(c));
  return cols;
}

GridResult run_grid(const DatasetCatalog& catalog, const ExperimentConfig& config, const std::string& title,
                    const std::string& subdir, const ProgressFn& progress) {
  config.validate();
  const auto attacks = catalog.resolve(config.attacks);

  GridResult result;
  result.checkpoints.push_back(0);
  for (std::size_t c : config.loop.checkpoints) result.checkpoints.push_back(c);

  // Validate every cell before spending time on any of them.
  for (const auto& learner : config.learners) {
    for (const auto& strategy : config.strategies) {
      LoopConfig lc = config.loop;
      lc.learner = learner_spec(learner);
      lc.strategy = parse_strategy(strategy);
      lc.validate();
    }
  }

  const fs::path out = config.output_dir.empty() ? fs::path{} : config.output_dir / subdir;
  for (const auto& attack : attacks) {
    const PreparedDataset data = catalog.load(attack);
    for (const auto& learner : config.learners) {
      for (const auto& strategy : config.strategies) {
        for (std::uint64_t seed : config.seeds) {
          LoopConfig lc = config.loop;
          lc.learner = learner_spec(learner);
          lc.strategy = parse_strategy(strategy);
          lc.seed = seed;
          RunRecord rec;
          rec.attack = data.encoder.attack_label();
          rec.learner = learner;
          rec.strategy = std::string(to_string(lc.strategy));
          rec.seed = seed;

          const auto start = Clock::now();
          ActiveState state = initialize(lc, data.splits.train);
          rec.trace.initial_train_seconds = seconds_since(start);
          rec.trace.initial = evaluate(*state.model, data.splits.dev);
          ReplayOracle oracle(data.splits.train.labels);
          while (true) {
            StepOutcome o = step(state, oracle, data.splits.dev);
            if (o.status != StepStatus::kOk) break;
            rec.trace.events.push_back(std::move(*o.event));
          }
          rec.isolation_cache_builds = state.isolation_cache_builds;
          report(progress, dataset_name(rec.attack) + " " + learner + "/" + rec.strategy + " seed " +
                               std::to_string(seed) + ": F1 " + format_number(rec.trace.initial.f1) +
                               " -> " + format_number(rec.trace.f1_after(lc.budget)));
          if (!out.empty()) {
            std::ostringstream jsonl;
            write_trace_jsonl(jsonl, rec.trace, false);
            write_file(out / "traces" / (run_stem(rec) + ".jsonl"), jsonl.str());
          }
          result.runs.push_back(std::move(rec));
        }
      }
    }
  }

  result.table.title = title;
  result.table.key_header = "learner/strategy";
  result.table.columns = checkpoint_columns(result.checkpoints);
  result.timing.title = title + " - seconds per step";
  result.timing.key_header = "learner/strategy";
  result.timing.columns = {"train time s", "query time s"};

  for (const auto& learner : config.learners) {
    for (const auto& strategy_name : config.strategies) {
      const std::string strategy(to_string(parse_strategy(strategy_name)));
      ResultRow row{learner + "/" + strategy, {}, true};
      for (std::size_t c : result.checkpoints) row.values.push_back(result.cell_f1(learner, strategy, c));
      result.table.rows.push_back(std::move(row));

      std::vector<double> train_per_attack, query_per_attack;
      for (const auto& attack : attacks) {
        std::vector<double> train_s, query_s;
        for (const RunRecord* r : result.select(learner, strategy)) {
          if (r->attack != canonical_label(attack)) continue;
          for (const auto& e : r->trace.events) {
            train_s.push_back(e.train_seconds);
            query_s.push_back(e.query_seconds);
          }
        }
        if (!train_s.empty()) {
          train_per_attack.push_back(mean_of(train_s));
          query_per_attack.push_back(mean_of(query_s));
        }
      }
      ResultRow timing{learner + "/" + strategy, {}, true};
      timing.values.push_back(train_per_attack.empty() ? MeanStd{} : aggregate(train_per_attack));
      timing.values.push_back(query_per_attack.empty() ? MeanStd{} : aggregate(query_per_attack));
      result.timing.rows.push_back(std::move(timing));
    }
  }

  if (!out.empty()) {
    write_table(out, "table", result.table);
    write_file(out / "timing.csv", result.timing.to_csv());
    // Query number versus dev F1 (seed mean) per attack, one file per cell.
    for (const auto& learner : config.learners) {
      for (const auto& strategy_name : config.strategies) {
        const std::string strategy(to_string(parse_strategy(strategy_name)));
        std::ostringstream csv;
        csv << "query";
        for (const auto& a : attacks) csv << ',' << dataset_name(a);
        csv << ",mean,std\n";
        for (std::size_t q = 0; q <= config.loop.budget; ++q) {
          csv << q;
          std::vector<double> values;
          for (const auto& a : attacks) {
            values.push_back(result.attack_f1(a, learner, strategy, q));
            csv << ',' << format_number(values.back());
          }
          const MeanStd ms = aggregate(values);
          csv << ',' << format_number(ms.mean) << ',' << format_number(ms.std) << '\n';
        }
        write_file(out / "curves" / (learner + "__" + strategy + ".csv"), csv.str());
      }
    }
  }
  return result;
}

}  // namespace

DatasetCatalog::DatasetCatalog(std::vector<std::string> names, Loader loader)
    : names_(std::move(names)), loader_(std::move(loader)) {
  if (!loader_) throw InvalidArgument("catalog needs a loader");
}

bool DatasetCatalog::contains(const std::string& name) const {
  const std::string label = canonical_label(name);
  return std::find(names_.begin(), names_.end(), label) != names_.end();
}

PreparedDataset DatasetCatalog::load(const std::string& name) const {
  if (!contains(name)) throw InvalidArgument("unknown dataset: " + name);
  return loader_(canonical_label(name));
}

std::vector<std::string> DatasetCatalog::resolve(const std::vector<std::string>& requested) const {
  if (requested.empty()) {
    if (names_.empty()) throw InvalidArgument("no datasets available");
    return names_;
  }
  std::vector<std::string> out;
  for (const auto& r : requested) {
    if (!contains(r)) throw InvalidArgument("unknown dataset: " + r);
    const std::string label = canonical_label(r);
    if (std::find(out.begin(), out.end(), label) == out.end()) out.push_back(label);
  }
  return out;
}

BinaryDataset cap_rows(const BinaryDataset& dataset, std::size_t max_rows, std::uint64_t seed) {
  if (max_rows == 0 || dataset.size() <= max_rows) return dataset;
  std::vector<std::size_t> positions(dataset.size());
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kCapStream));
  shuffle(std::span<std::size_t>(positions), rng);
  positions.resize(max_rows);
  std::sort(positions.begin(), positions.end());

  BinaryDataset out;
  out.source = dataset.source;
  out.attack_label = dataset.attack_label;
  out.rows.reserve(max_rows);
  for (std::size_t p : positions) {
    out.rows.push_back(dataset.rows[p]);
    if (dataset.record(p).is_normal()) {
      ++out.normals;
    } else {
      ++out.attacks;
    }
  }
  if (out.attacks == 0 || out.normals == 0) {
    throw InvalidArgument("row cap leaves " + dataset.attack_label + " without both classes");
  }
  return out;
}

DatasetCatalog DatasetCatalog::from_records(std::shared_ptr<const std::vector<RawRecord>> records,
                                            std::uint64_t split_seed, std::size_t max_rows,
                                            std::size_t min_occurrences) {
  auto datasets = std::make_shared<std::vector<BinaryDataset>>(
      build_attack_datasets(std::move(records), min_occurrences));
  std::vector<std::string> names;
  for (const auto& d : *datasets) names.push_back(d.attack_label);
  auto loader = [datasets, split_seed, max_rows](const std::string& label) {
    for (const auto& d : *datasets) {
      if (d.attack_label != label) continue;
      const BinaryDataset capped = cap_rows(d, max_rows, split_seed);
      EncodeResult enc = encode(capped);
      PreparedDataset p;
      p.name = dataset_name(label);
      p.splits = split(enc.data, split_seed);
      p.metadata = dataset_metadata(capped, enc.encoder, p.splits);
      p.encoder = std::move(enc.encoder);
      return p;
    }
    throw InvalidArgument("unknown dataset: " + label);
  };
  return DatasetCatalog(std::move(names), std::move(loader));
}

DatasetCatalog DatasetCatalog::from_directory(const fs::path& root) {
  std::ifstream in(root / "index.json");
  if (!in) throw InvalidArgument("no prepared datasets at " + root.string() + " (missing index.json)");
  const auto index = nlohmann::json::parse(in);
  std::vector<std::string> names;
  for (const auto& entry : index.at("datasets")) names.push_back(entry.at("attack_label").get<std::string>());
  auto loader = [root](const std::string& label) { return load_prepared(root / dataset_name(label)); };
  return DatasetCatalog(std::move(names), std::move(loader));
}

void ExperimentConfig::validate() const {
  if (learners.empty()) throw InvalidArgument("at least one learner is required");
  if (strategies.empty()) throw InvalidArgument("at least one strategy is required");
  if (seeds.empty()) throw InvalidArgument("at least one seed is required");
  for (const auto& l : learners) learner_spec(l);
  for (const auto& s : strategies) parse_strategy(s);
  if (!(anomaly_threshold > 0.0 && anomaly_threshold < 1.0)) {
    throw InvalidArgument("anomaly_threshold must lie in (0, 1)");
  }
  loop.validate();
}

LearnerSpec learner_spec(const std::string& name) {
  if (name == "ensemble") return EnsembleRecipe::paper_default(0);
  const LearnerKind kind = parse_learner_kind(name);
  if (kind == LearnerKind::kIsolationForest) {
    throw InvalidArgument("isolation forest is not a supervised learner; use it as a sampling strategy");
  }
  return LearnerConfig::defaults(kind);
}

const ResultRow& ResultTable::row(const std::string& key) const {
  for (const auto& r : rows) {
    if (r.key == key) return r;
  }
  throw InvalidArgument("no row " + key + " in table");
}

std::size_t ResultTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw InvalidArgument("no column " + name + " in table");
  return static_cast<std::size_t>(it - columns.begin());
}

std::string ResultTable::to_text() const {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({key_header});
  for (const auto& c : columns) cells.back().push_back(c);
  for (const auto& r : rows) {
    cells.push_back({r.key});
    for (const auto& v : r.values) cells.back().push_back(format_cell(v, r.show_std));
  }
  std::vector<std::size_t> widths(columns.size() + 1, 0);
  for (const auto& line : cells) {
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], display_width(line[i]));
  }
  std::string out = title + "\n";
  for (const auto& line : cells) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i) {
      std::string cell = line[i];
      if (i + 1 < line.size()) pad_to(cell, widths[i] + 2);
      text += cell;
    }
    out += text + "\n";
  }
  return out;
}

std::string ResultTable::to_csv() const {
  std::string out = key_header;
  for (const auto& c : columns) out += "," + c + " mean," + c + " std";
  out += "\n";
  for (const auto& r : rows) {
    out += r.key;
    for (const auto& v : r.values) {
      out += "," + format_number(v.mean) + "," + (r.show_std ? format_number(v.std) : std::string{});
    }
    out += "\n";
  }
  return out;
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json doc = {{"schema_version", 1}, {"title", title}, {"key", key_header}, {"columns", columns}};
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : r.values) {
      values.push_back(r.show_std ? nlohmann::json{{"mean", v.mean}, {"std", v.std}}
                                  : nlohmann::json{{"mean", v.mean}});
    }
    doc["rows"].push_back({{"key", r.key}, {"values", values}});
  }
  return doc;
}

std::vector<const RunRecord*> GridResult::select(const std::string& learner, const std::string& strategy) const {
  std::vector<const RunRecord*> out;
  for (const auto& r : runs) {
    if (r.learner == learner && r.strategy == strategy) out.push_back(&r);
  }
  return out;
}

double GridResult::attack_f1(const std::string& attack, const std::string& learner, const std::string& strategy,
                             std::size_t checkpoint) const {
  const std::string label = canonical_label(attack);
  std::vector<double> values;
  for (const RunRecord* r : select(learner, strategy)) {
    if (r->attack == label) values.push_back(r->trace.f1_after(checkpoint));
  }
  if (values.empty()) throw InvalidArgument("no runs for " + attack + " " + learner + "/" + strategy);
  return mean_of(values);
}

MeanStd GridResult::cell_f1(const std::string& learner, const std::string& strategy,
                            std::size_t checkpoint) const {
  std::vector<std::string> attacks;
  for (const RunRecord* r : select(learner, strategy)) {
    if (std::find(attacks.begin(), attacks.end(), r->attack) == attacks.end()) attacks.push_back(r->attack);
  }
  if (attacks.empty()) throw InvalidArgument("no runs for " + learner + "/" + strategy);
  std::vector<double> values;
  for (const auto& a : attacks) values.push_back(attack_f1(a, learner, strategy, checkpoint));
  return aggregate(values);
}

MeanStd BaselineOracleResult::baseline() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(mean_of(r.baseline_f1));
  return aggregate(v);
}

MeanStd BaselineOracleResult::oracle() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(mean_of(r.oracle_f1));
  return aggregate(v);
}

std::vector<std::string> prepare_catalog(const DatasetCatalog& catalog, const fs::path& out_dir) {
  nlohmann::json index = {{"schema_version", 1}, {"datasets", nlohmann::json::array()}};
  for (const auto& name : catalog.names()) {
    const PreparedDataset p = catalog.load(name);
    save_prepared(out_dir / p.name, p);
    index["datasets"].push_back({{"name", p.name},
                                 {"attack_label", name},
                                 {"attacks", p.metadata.at("attacks")},
                                 {"normals", p.metadata.at("normals")},
                                 {"prevalence", p.metadata.at("prevalence")}});
  }
  write_file(out_dir / "index.json", index.dump(2) + "\n");
  return catalog.names();
}

std::vector<std::string> cmd_prepare(const fs::path& raw, const fs::path& out_dir, std::uint64_t split_seed,
                                     std::size_t max_rows) {
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd_file(raw));
  return prepare_catalog(DatasetCatalog::from_records(std::move(records), split_seed, max_rows), out_dir);
}

BaselineOracleResult cmd_baseline_oracle(const DatasetCatalog& catalog, const ExperimentConfig& config,
                                         const ProgressFn& progress) {
  config.validate();
  const auto attacks = catalog.resolve(config.attacks);
  BaselineOracleResult result;
  for (const auto& attack : attacks) {
    const PreparedDataset data = catalog.load(attack);
    BaselineOracleRow row;
    row.attack = attack;
    row.prevalence = data.metadata.at("prevalence").get<double>();
    for (std::uint64_t seed : config.seeds) {
      LearnerConfig iso = LearnerConfig::isolation_forest();
      iso.seed = derive_seed(seed, kBaselineStream);
      iso.anomaly_threshold = config.anomaly_threshold;
      const Model baseline = train(iso, data.splits.train);
      row.baseline_f1.push_back(evaluate(baseline, data.splits.dev).f1);

      LearnerConfig rf = LearnerConfig::random_forest();
      rf.seed = derive_seed(seed, kOracleStream);
      const auto start = Clock::now();
      const Model oracle = train(rf, data.splits.train);
      row.oracle_train_seconds.push_back(seconds_since(start));
      row.oracle_dev.push_back(evaluate(oracle, data.splits.dev));
      row.oracle_f1.push_back(row.oracle_dev.back().f1);
      report(progress, dataset_name(attack) + " seed " + std::to_string(seed) + ": baseline F1 " +
                           format_number(row.baseline_f1.back()) + ", oracle F1 " +
                           format_number(row.oracle_f1.back()));
    }
    result.rows.push_back(std::move(row));
  }

  const bool spread = config.seeds.size() > 1;
  result.table.title = "Isolation-forest baseline and random-forest oracle (dev F1)";
  result.table.key_header = "attack";
  result.table.columns = {"prevalence", "baseline F1", "oracle F1"};
  result.timing.title = "Random-forest oracle training time";
  result.timing.key_header = "attack";
  result.timing.columns = {"train time s"};
  for (const auto& r : result.rows) {
    result.table.rows.push_back({dataset_name(r.attack),
                                 {MeanStd{r.prevalence, 0.0}, aggregate(r.baseline_f1), aggregate(r.oracle_f1)},
                                 spread});
    result.timing.rows.push_back({dataset_name(r.attack), {aggregate(r.oracle_train_seconds)}, spread});
  }
  std::vector<double> prevalences;
  for (const auto& r : result.rows) prevalences.push_back(r.prevalence);
  result.table.rows.push_back({"mean", {aggregate(prevalences), result.baseline(), result.oracle()}, true});

  if (!config.output_dir.empty()) {
    const fs::path out = config.output_dir / "baseline_oracle";
    write_table(out, "table", result.table);
    write_file(out / "timing.csv", result.timing.to_csv());
  }
  return result;
}

GridResult cmd_grid(const DatasetCatalog& catalog, const ExperimentConfig& config, const ProgressFn& progress) {
  return run_grid(catalog, config, "Active learning: dev F1 by learner and sampling strategy", "grid",
                  progress);
}

GridResult cmd_unsup_sampling(const DatasetCatalog& catalog, const ExperimentConfig& config,
                              const ProgressFn& progress) {
  ExperimentConfig c = config;
  c.learners = {"rf"};
  c.strategies = {"entropy", "isolation"};
  return run_grid(catalog, c, "Active learning with unsupervised sampling (random-forest learner)",
                  "unsup_sampling", progress);
}

ZScoreResult cmd_zscore_report(const DatasetCatalog& catalog, const std::string& attack,
                               const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::string label = catalog.resolve({attack}).front();
  const PreparedDataset data = catalog.load(label);
  ZScoreResult result;
  result.attack = label;
  for (std::uint64_t seed : config.seeds) {
    LoopConfig lc = config.loop;
    lc.learner = learner_spec(config.learners.front());
    lc.seed = seed;
    lc.budget = 0;
    lc.checkpoints.clear();
    const ActiveState state = initialize(lc, data.splits.train);
    ZScoreRun run;
    run.seed = seed;
    run.seed_positives = static_cast<std::size_t>(
        std::count(state.labeled_labels.begin(), state.labeled_labels.end(), std::uint8_t{1}));
    run.dev = evaluate(*state.model, data.splits.dev);
    run.report = feature_z_scores(*state.model, data.splits.dev);
    report(progress, dataset_name(label) + " seed " + std::to_string(seed) + ": " +
                         std::to_string(run.seed_positives) + " positive seed labels, dev F1 " +
                         format_number(run.dev.f1));
    result.runs.push_back(std::move(run));
  }

  // Features ranked by their z averaged over the runs where it is finite.
  std::map<std::string, std::vector<double>> finite;
  for (const auto& run : result.runs) {
    for (const auto& f : run.report.features) {
      if (f.z && std::isfinite(*f.z)) finite[f.feature].push_back(*f.z);
    }
  }
  std::vector<std::pair<std::string, MeanStd>> ranked;
  for (const auto& [name, zs] : finite) ranked.emplace_back(name, aggregate(zs));
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second.mean > b.second.mean; });
  result.table.title = "Feature z-scores of the seed-set model on " + dataset_name(label) + " (dev)";
  result.table.key_header = "feature";
  result.table.columns = {"z"};
  for (const auto& [name, z] : ranked) result.table.rows.push_back({name, {z}, config.seeds.size() > 1});

  if (!config.output_dir.empty()) {
    const fs::path out = config.output_dir / "zscore" / dataset_name(label);
    write_table(out, "table", result.table);
    for (const auto& run : result.runs) {
      nlohmann::json doc = to_json(run.report);
      doc["seed"] = run.seed;
      doc["seed_positives"] = run.seed_positives;
      doc["dev"] = to_json(run.dev);
      write_file(out / ("seed" + std::to_string(run.seed) + ".json"), doc.dump(2) + "\n");
    }
  }
  return result;
}

}  // namespace alnids
