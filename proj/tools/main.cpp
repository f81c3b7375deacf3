// chronocl command line: run, sweep and analyze chronological
// continual-learning simulations.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "chronocl/config.hpp"
#include "chronocl/runner.hpp"
#include "chronocl/textio.hpp"

namespace {

using namespace chronocl;

SimulationConfig load_config(const std::string& path, bool has_seed,
                             std::uint64_t seed) {
  SimulationConfig cfg = parse_simulation_config(read_text_file(path));
  if (has_seed) cfg.seed = seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chronocl: chronological continual-learning simulation engine"};
  app.require_subcommand(1);

  std::string config_path, grid_path, out_dir, results_dir, format = "csv";
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  int jobs = 1;
  double min_eval_auc = 0.75;

  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  simulate->add_option("--config", config_path, "Run-config JSON file")->required();
  simulate->add_option("--seed", seed_override, "Override the config seed")
      ->each([&](const std::string&) { has_seed = true; });
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* baseline = app.add_subcommand("baseline", "Run the full-retraining baseline");
  baseline->add_option("--config", config_path, "Run-config JSON file")->required();
  baseline->add_option("--seed", seed_override, "Override the config seed")
      ->each([&](const std::string&) { has_seed = true; });
  baseline->add_option("--out", out_dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a grid of simulations");
  sweep->add_option("--grid", grid_path, "Sweep-grid JSON file")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Worker threads")->default_val(1);

  auto* analyze = app.add_subcommand(
      "analyze", "Transfer-decay analysis over emitted results");
  analyze->add_option("--results", results_dir, "Directory with runs.jsonl")
      ->required();
  analyze->add_option("--min-eval-auc", min_eval_auc,
                      "Eval-AUC filter for the decay estimator")
      ->default_val(0.75);

  auto* report = app.add_subcommand("report", "Re-emit report files");
  report->add_option("--results", results_dir, "Directory with runs.jsonl")
      ->required();
  report->add_option("--format", format, "Output format (csv)")->default_val("csv");
  report->add_option("--out", out_dir, "Output directory (defaults to results)");

  auto* init_config = app.add_subcommand("init-config", "Print a default config");
  std::string init_strategy = "Naive";
  int init_mb = 10;
  init_config->add_option("--strategy", init_strategy, "Strategy kind");
  init_config->add_option("--monthly-batches", init_mb, "Monthly batch count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      const RunRecord record =
          run_simulation(load_config(config_path, has_seed, seed_override));
      write_run_artifacts(record, out_dir);
      std::cout << "run " << record.run_id << ": final c_auc "
                << format_double(record.series.back().c_auc) << ", "
                << record.ledger.samples_processed << " samples, "
                << format_double(record.duration_ms) << " ms\n";
    } else if (baseline->parsed()) {
      const RunRecord record =
          run_full_retraining(load_config(config_path, has_seed, seed_override));
      write_run_artifacts(record, out_dir);
      std::cout << "baseline " << record.run_id << ": final c_auc "
                << format_double(record.series.back().c_auc) << ", "
                << record.ledger.samples_processed << " samples, "
                << format_double(record.duration_ms) << " ms\n";
    } else if (sweep->parsed()) {
      const auto grid = expand_grid(read_text_file(grid_path));
      const ResultSet results = run_sweep(grid, jobs);
      emit_reports(results, out_dir);
      std::cout << "sweep: " << results.runs.size() << "/" << grid.size()
                << " runs completed, reports in " << out_dir << "\n";
      for (const auto& [id, message] : results.failures)
        std::cerr << "failed run " << id << ": " << message << "\n";
      if (!results.failures.empty()) return 2;
    } else if (analyze->parsed()) {
      const ResultSet results = load_results(results_dir, min_eval_auc);
      std::cout << analysis_json(results);
    } else if (report->parsed()) {
      if (format != "csv")
        throw std::invalid_argument("report: unsupported format '" + format + "'");
      const ResultSet results = load_results(results_dir);
      emit_reports(results, out_dir.empty() ? results_dir : out_dir);
      std::cout << "reports written to "
                << (out_dir.empty() ? results_dir : out_dir) << "\n";
    } else if (init_config->parsed()) {
      SimulationConfig cfg = default_config();
      cfg.execution.monthly_batches = init_mb;
      cfg.strategy =
          default_strategy_config(strategy_from_string(init_strategy), init_mb);
      std::cout << nlohmann::json::parse(to_json(cfg)).dump(2) << "\n";
    }
  } catch (const std::exception& err) {
    nlohmann::json diag{{"error", err.what()}};
    std::cerr << diag.dump() << "\n";
    return 1;
  }
  return 0;
}
