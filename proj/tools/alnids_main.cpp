#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "alnids/dataset.hpp"
#include "alnids/error.hpp"
#include "alnids/experiments.hpp"
#include "alnids/label_service.hpp"
#include "alnids/synthetic.hpp"

namespace fs = std::filesystem;
using namespace alnids;

namespace {

// Options shared by the experiment subcommands.
struct RunOptions {
  std::string data;   // prepared root written by `prepare`
  std::string input;  // raw KDD file, prepared in memory
  std::uint64_t split_seed = 0;
  std::size_t max_rows = 0;
  std::vector<std::string> attacks;
  std::vector<std::uint64_t> seeds = {0};
  std::vector<std::string> learners = {"lr", "rf"};
  std::vector<std::string> strategies = {"random", "uncertainty", "entropy"};
  std::size_t n_seed = 1000;
  std::size_t budget = 100;
  std::vector<std::size_t> checkpoints = {10, 50, 100};
  double threshold = 0.5;
  std::string out;
  bool quiet = false;
  bool timing = true;
};

void add_source_options(CLI::App* cmd, RunOptions& o) {
  auto* group = cmd->add_option_group("source", "where datasets come from");
  group->add_option("--data", o.data, "Directory written by `alnids prepare`");
  group->add_option("--input", o.input, "Raw KDD file, split in memory");
  group->require_option(1);
  cmd->add_option("--split-seed", o.split_seed, "Seed of the 80/10/10 split (with --input)");
  cmd->add_option("--max-rows", o.max_rows, "Cap each dataset at this many rows (0 = no cap)");
}

void add_run_options(CLI::App* cmd, RunOptions& o, bool grid_cells) {
  add_source_options(cmd, o);
  cmd->add_option("--attacks", o.attacks, "Attack subset, e.g. smurf,nmap (default: all)")->delimiter(',');
  cmd->add_option("--seeds", o.seeds, "Run seeds")->delimiter(',')->capture_default_str();
  if (grid_cells) {
    cmd->add_option("--learners", o.learners, "lr, rf, gb or ensemble")->delimiter(',')->capture_default_str();
    cmd->add_option("--strategies", o.strategies, "random, uncertainty, entropy or isolation")
        ->delimiter(',')
        ->capture_default_str();
  }
  cmd->add_option("--n-seed", o.n_seed, "Size of the initial labeled set")->capture_default_str();
  cmd->add_option("--budget", o.budget, "Query budget")->capture_default_str();
  cmd->add_option("--checkpoints", o.checkpoints, "Reported query counts")->delimiter(',')->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory for tables, traces and curves");
  cmd->add_flag("--quiet", o.quiet, "No per-run progress on stderr");
  cmd->add_flag("!--no-timing", o.timing, "Do not print the timing table");
}

DatasetCatalog open_catalog(const RunOptions& o) {
  if (!o.data.empty()) return DatasetCatalog::from_directory(o.data);
  auto records = std::make_shared<const std::vector<RawRecord>>(parse_kdd_file(o.input));
  return DatasetCatalog::from_records(std::move(records), o.split_seed, o.max_rows);
}

ExperimentConfig experiment_config(const RunOptions& o) {
  ExperimentConfig c;
  c.attacks = o.attacks;
  c.seeds = o.seeds;
  c.learners = o.learners;
  c.strategies = o.strategies;
  c.loop.n_seed = o.n_seed;
  c.loop.budget = o.budget;
  c.loop.checkpoints = o.checkpoints;
  c.anomaly_threshold = o.threshold;
  c.output_dir = o.out;
  return c;
}

ProgressFn progress_fn(const RunOptions& o) {
  if (o.quiet) return {};
  return [](const std::string& line) { std::cerr << line << '\n'; };
}

void print_tables(const ResultTable& table, const ResultTable& timing, bool with_timing) {
  std::cout << table.to_text();
  if (with_timing) std::cout << '\n' << timing.to_text();
}

int serve(const std::string& data_dir, const std::string& state_dir, const std::string& host, int port) {
  // Block termination signals before any thread starts so sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto service = std::make_shared<LabelService>(ServiceOptions{data_dir, state_dir});
  const std::size_t restored = service->restore_sessions();
  LabelServer server(service);
  const int bound = server.start(host, port);
  std::cerr << "serving on http://" << host << ':' << bound << " (" << restored << " sessions restored)"
            << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pool-based active learning for network intrusion detection"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);

  std::string synth_out;
  SyntheticOptions synth;
  auto* synthesize = app.add_subcommand("synthesize", "Write a KDD-format corpus with the 10% file's label counts");
  synthesize->add_option("--out", synth_out, "Output file")->required();
  synthesize->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  synthesize->add_option("--scale", synth.scale, "Multiply every label count")->capture_default_str();

  std::string prep_input, prep_out;
  std::uint64_t prep_seed = 0;
  std::size_t prep_max_rows = 0;
  auto* prepare = app.add_subcommand("prepare", "Build, encode and split the per-attack datasets");
  prepare->add_option("--input", prep_input, "Raw KDD file")->required()->check(CLI::ExistingFile);
  prepare->add_option("--out", prep_out, "Output directory")->required();
  prepare->add_option("--split-seed", prep_seed, "Seed of the 80/10/10 split")->capture_default_str();
  prepare->add_option("--max-rows", prep_max_rows, "Cap each dataset at this many rows (0 = no cap)");

  RunOptions baseline_opts;
  auto* baseline = app.add_subcommand("baseline-oracle", "Isolation-forest baseline and random-forest oracle");
  add_run_options(baseline, baseline_opts, false);
  baseline->add_option("--threshold", baseline_opts.threshold, "Anomaly-score threshold of the baseline")
      ->capture_default_str();

  RunOptions grid_opts;
  auto* grid = app.add_subcommand("grid", "Active learning over learner x strategy cells");
  add_run_options(grid, grid_opts, true);

  RunOptions unsup_opts;
  auto* unsup = app.add_subcommand("unsup-sampling", "Entropy versus isolation-forest sampling (random forest)");
  add_run_options(unsup, unsup_opts, false);

  RunOptions z_opts;
  z_opts.learners = {"rf"};
  std::string z_attack = "nmap";
  auto* zscore = app.add_subcommand("zscore-report", "Feature z-scores of the seed-set model");
  add_run_options(zscore, z_opts, false);
  zscore->add_option("--attack", z_attack, "Attack dataset")->capture_default_str();
  zscore->add_option("--learner", z_opts.learners.front(), "Learner of the seed-set model")->capture_default_str();

  std::string serve_data, serve_state = "sessions", serve_host = "127.0.0.1";
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP labeling service");
  serve_cmd->add_option("--data", serve_data, "Directory written by `alnids prepare`")->required();
  serve_cmd->add_option("--state", serve_state, "Session directory")->capture_default_str();
  serve_cmd->add_option("--host", serve_host)->capture_default_str();
  serve_cmd->add_option("--port", serve_port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synthesize) {
      std::ofstream out(synth_out, std::ios::binary);
      if (!out) throw Error("cannot write " + synth_out);
      write_kdd(out, generate_kdd_like(synth));
    } else if (*prepare) {
      for (const auto& name : cmd_prepare(prep_input, prep_out, prep_seed, prep_max_rows)) {
        std::cout << dataset_name(name) << '\n';
      }
    } else if (*baseline) {
      const auto r = cmd_baseline_oracle(open_catalog(baseline_opts), experiment_config(baseline_opts),
                                         progress_fn(baseline_opts));
      print_tables(r.table, r.timing, baseline_opts.timing);
    } else if (*grid) {
      const auto r = cmd_grid(open_catalog(grid_opts), experiment_config(grid_opts), progress_fn(grid_opts));
      print_tables(r.table, r.timing, grid_opts.timing);
    } else if (*unsup) {
      const auto r =
          cmd_unsup_sampling(open_catalog(unsup_opts), experiment_config(unsup_opts), progress_fn(unsup_opts));
      print_tables(r.table, r.timing, unsup_opts.timing);
    } else if (*zscore) {
      const auto r = cmd_zscore_report(open_catalog(z_opts), z_attack, experiment_config(z_opts), progress_fn(z_opts));
      std::cout << r.table.to_text();
    } else if (*serve_cmd) {
      return serve(serve_data, serve_state, serve_host, serve_port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
