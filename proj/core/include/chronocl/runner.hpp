#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "chronocl/hypothesis.hpp"
#include "chronocl/run_record.hpp"

namespace chronocl {

/// Called after every optimizer step; used by tests to watch trajectories.
using StepObserver =
    std::function<void(int month, int batch_index, const StrategyState& state)>;

/// Monthly training loop with release-event consolidation and end-of-month
/// evaluation at every eval event. Deterministic given the config.
RunRecord run_simulation(const SimulationConfig& config,
                         const StepObserver& observer = {});

/// At every release event trains a fresh model from scratch on balanced
/// per-dataset batches from all released generators under a cosine schedule;
/// evaluation as in run_simulation; the ledger accumulates across events.
RunRecord run_full_retraining(const SimulationConfig& config);

/// Executes all configs (optionally across threads); failures are recorded,
/// not fatal. Results are ordered canonically by run id.
ResultSet run_sweep(const std::vector<SimulationConfig>& grid, int jobs = 1);

/// One JSONL object for one eval event of a run.
std::string jsonl_line(const RunRecord& record, int event_index);

/// record.json + runs.jsonl + auc_matrix.csv for a single run.
void write_run_artifacts(const RunRecord& record,
                         const std::filesystem::path& out_dir);

/// Writes runs.jsonl, cauc_timeseries.csv, spider.csv, hypothesis.json and
/// summary.csv. Byte-identical when re-emitted from the same ResultSet.
void emit_reports(const ResultSet& results,
                  const std::filesystem::path& out_dir);

/// Rebuilds a ResultSet from a directory containing runs.jsonl.
ResultSet load_results(const std::filesystem::path& dir,
                       double filter_threshold = 0.75);

}  // namespace chronocl
