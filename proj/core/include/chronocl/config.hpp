#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronocl/run_record.hpp"

namespace chronocl {

/// Desk-scale defaults: 6 generators over an 80-month horizon with the
/// release chronology {0, 27, 29, 36, 60, 67}, Naive strategy, 10 monthly
/// batches of 16 samples.
SimulationConfig default_config();

/// Per-setting strategy defaults (learning rate, buffer size in batches,
/// regularizer weights, EMA decays).
StrategyConfig default_strategy_config(StrategyKind kind, int monthly_batches);

/// Throws std::invalid_argument with a description on any bad field.
void validate(const SimulationConfig& config);

/// Strict parser for the run-config document with top-level keys
/// {seed, schedule, model, strategy, execution}; all fields optional,
/// unknown keys rejected.
SimulationConfig parse_simulation_config(const std::string& json_text);

/// Canonical serialization (sorted keys, shortest-round-trip numbers).
std::string to_json(const SimulationConfig& config);

/// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const SimulationConfig& config);

/// 16 hex digits of config_hash; names runs and canonicalizes sweep order.
std::string run_id_for(const SimulationConfig& config);

/// Expands a sweep grid document:
///   {base?, strategies? (may include "FullRetraining"), monthly_batches?,
///    seeds? | {n_seeds, master_seed}, strategy_overrides?}
std::vector<SimulationConfig> expand_grid(const std::string& json_text);

}  // namespace chronocl
