#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronocl/metrics.hpp"
#include "chronocl/model.hpp"
#include "chronocl/strategies.hpp"
#include "chronocl/stream.hpp"

namespace chronocl {

struct ExecutionParams {
  int monthly_batches = 10;
  int batch_size = 16;
  int eval_per_class = 250;
  bool eval_every_month = false;
  bool full_retraining = false;
  int retrain_iters = 4000;
};

struct SimulationConfig {
  std::uint64_t seed = 1;
  RegistryParams schedule;
  ModelArch model;
  StrategyConfig strategy;
  ExecutionParams execution;
};

/// Counters standing in for GPU time: stream samples consumed for training,
/// distinct samples drawn, and optimizer steps.
struct ComputeLedger {
  long long samples_processed = 0;
  long long unique_samples = 0;
  long long parameter_updates = 0;
};

struct RunRecord {
  std::string run_id;
  SimulationConfig config;
  std::vector<MetricPoint> series;
  AucMatrix matrix;
  ComputeLedger ledger;
  double duration_ms = 0.0;  // informational, excluded from byte-identity
};

/// Strategy kind string, or "FullRetraining" for baseline records.
std::string strategy_label(const RunRecord& record);

}  // namespace chronocl
