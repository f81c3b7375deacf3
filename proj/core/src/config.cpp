#include "chronocl/config.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

#include "chronocl/textio.hpp"

namespace chronocl {

namespace {

using nlohmann::json;

// Desk-scale learning rate. The published per-strategy rates were tuned for
// large vision backbones and leave this 1k-parameter MLP untrained within a
// run, so one re-tuned rate is used for every strategy.
constexpr double kDeskLearningRate = 4e-2;

void check_keys(const json& obj, std::initializer_list<const char*> known,
                const char* where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) ok = true;
    if (!ok)
      throw std::invalid_argument(std::string("config: unknown key '") +
                                  item.key() + "' in " + where);
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

json schedule_to_json(const RegistryParams& p) {
  return json{{"n_generators", p.n_generators},
              {"dim", p.dim},
              {"strength", p.strength},
              {"noise_scale", p.noise_scale},
              {"release_months", p.release_months},
              {"horizon_months", p.horizon_months}};
}

json model_to_json(const ModelArch& m) {
  return json{{"input_dim", m.input_dim},
              {"hidden_dim", m.hidden_dim},
              {"activation", m.activation}};
}

json strategy_to_json(const StrategyConfig& s) {
  return json{{"kind", to_string(s.kind)},
              {"lr", s.lr},
              {"lambda_reg", s.lambda_reg},
              {"buffer_capacity", s.buffer_capacity},
              {"plastic_decay", s.plastic_decay},
              {"stable_decay", s.stable_decay},
              {"esmer_beta", s.esmer_beta},
              {"esmer_alpha", s.esmer_alpha},
              {"derpp_alpha", s.derpp_alpha}};
}

json execution_to_json(const ExecutionParams& e) {
  return json{{"monthly_batches", e.monthly_batches},
              {"batch_size", e.batch_size},
              {"eval_per_class", e.eval_per_class},
              {"eval_every_month", e.eval_every_month},
              {"mode", e.full_retraining ? "retrain" : "cl"},
              {"retrain_iters", e.retrain_iters}};
}

void schedule_from_json(const json& obj, RegistryParams& p) {
  check_keys(obj,
             {"n_generators", "dim", "strength", "noise_scale",
              "release_months", "horizon_months"},
             "schedule");
  read_field(obj, "n_generators", p.n_generators);
  read_field(obj, "dim", p.dim);
  read_field(obj, "strength", p.strength);
  read_field(obj, "noise_scale", p.noise_scale);
  read_field(obj, "release_months", p.release_months);
  read_field(obj, "horizon_months", p.horizon_months);
}

void model_from_json(const json& obj, ModelArch& m) {
  check_keys(obj, {"input_dim", "hidden_dim", "activation"}, "model");
  read_field(obj, "input_dim", m.input_dim);
  read_field(obj, "hidden_dim", m.hidden_dim);
  read_field(obj, "activation", m.activation);
}

void strategy_from_json(const json& obj, StrategyConfig& s) {
  check_keys(obj,
             {"kind", "lr", "lambda_reg", "buffer_capacity", "plastic_decay",
              "stable_decay", "esmer_beta", "esmer_alpha", "derpp_alpha"},
             "strategy");
  if (obj.contains("kind")) s.kind = strategy_from_string(obj.at("kind"));
  read_field(obj, "lr", s.lr);
  read_field(obj, "lambda_reg", s.lambda_reg);
  read_field(obj, "buffer_capacity", s.buffer_capacity);
  read_field(obj, "plastic_decay", s.plastic_decay);
  read_field(obj, "stable_decay", s.stable_decay);
  read_field(obj, "esmer_beta", s.esmer_beta);
  read_field(obj, "esmer_alpha", s.esmer_alpha);
  read_field(obj, "derpp_alpha", s.derpp_alpha);
}

void execution_from_json(const json& obj, ExecutionParams& e) {
  check_keys(obj,
             {"monthly_batches", "batch_size", "eval_per_class",
              "eval_every_month", "mode", "retrain_iters"},
             "execution");
  read_field(obj, "monthly_batches", e.monthly_batches);
  read_field(obj, "batch_size", e.batch_size);
  read_field(obj, "eval_per_class", e.eval_per_class);
  read_field(obj, "eval_every_month", e.eval_every_month);
  if (obj.contains("mode")) {
    const std::string mode = obj.at("mode");
    if (mode == "cl")
      e.full_retraining = false;
    else if (mode == "retrain")
      e.full_retraining = true;
    else
      throw std::invalid_argument("config: execution.mode must be cl|retrain");
  }
  read_field(obj, "retrain_iters", e.retrain_iters);
}

SimulationConfig config_from_json(const json& doc) {
  check_keys(doc, {"seed", "schedule", "model", "strategy", "execution"},
             "config");
  SimulationConfig cfg = default_config();
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("schedule")) schedule_from_json(doc.at("schedule"), cfg.schedule);
  if (doc.contains("model")) model_from_json(doc.at("model"), cfg.model);
  if (doc.contains("strategy")) strategy_from_json(doc.at("strategy"), cfg.strategy);
  if (doc.contains("execution")) execution_from_json(doc.at("execution"), cfg.execution);
  return cfg;
}

}  // namespace

SimulationConfig default_config() {
  SimulationConfig cfg;
  cfg.seed = 1;
  cfg.schedule.n_generators = 6;
  cfg.schedule.dim = 32;
  cfg.schedule.strength = 3.0;
  cfg.schedule.noise_scale = 0.1;
  cfg.schedule.release_months = {0, 27, 29, 36, 60, 67};
  cfg.schedule.horizon_months = 80;
  cfg.model.input_dim = 32;
  cfg.model.hidden_dim = 32;
  cfg.model.activation = "tanh";
  cfg.strategy = default_strategy_config(StrategyKind::Naive, 10);
  cfg.execution = ExecutionParams{};
  return cfg;
}

StrategyConfig default_strategy_config(StrategyKind kind, int monthly_batches) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.lr = kDeskLearningRate;
  // EMA windows are measured in optimizer steps, so useful decays depend on
  // the run length (80 * monthly_batches steps): a stable copy averages a
  // quarter of the run, ESMER's a twelfth (its gate already throttles drift,
  // a slower copy lags its learning), the plastic copy two months' worth.
  // At monthly_batches = 50 these give the published 0.999/0.99 values.
  const double total_steps = 80.0 * monthly_batches;
  cfg.plastic_decay = 1.0 - 1.0 / (total_steps / 40.0);
  cfg.stable_decay = kind == StrategyKind::ESMER
                         ? 1.0 - 1.0 / (total_steps / 12.0)
                         : 1.0 - 1.0 / (total_steps / 4.0);
  // A wider gate than published: at beta = 1 the gate swallows the high-loss
  // refresher batches of forgotten generators and relearning never happens.
  cfg.esmer_beta = 2.0;
  cfg.esmer_alpha = 0.9;
  cfg.derpp_alpha = 0.5;

  // Buffer sizes (in batches) follow the published per-setting values.
  if (uses_buffer(kind)) {
    if (monthly_batches >= 50) {
      cfg.buffer_capacity = kind == StrategyKind::Replay ? 10 : 50;
    } else if (monthly_batches >= 20) {
      cfg.buffer_capacity = (kind == StrategyKind::CLSEREWC ||
                             kind == StrategyKind::ESMER ||
                             kind == StrategyKind::CLSER)
                                ? 100
                                : 50;
    } else {
      cfg.buffer_capacity = 100;
    }
  } else {
    cfg.buffer_capacity = 0;
  }

  // Regularizer weights. The large published values (10) were tuned against
  // vision-scale losses; under this model they freeze learning outright
  // (CLS-ER collapses to chance, Replay+EWC loses every new task), so the
  // desk defaults scale them down. Values that already work are kept as
  // published.
  switch (kind) {
    case StrategyKind::Naive:
      cfg.lambda_reg = 0.0;
      break;
    case StrategyKind::Replay:
      // The concatenated replay batch carries no weight; kept for round-trip.
      cfg.lambda_reg = monthly_batches >= 20 && monthly_batches < 50 ? 1.0 : 10.0;
      break;
    case StrategyKind::EWC:
      cfg.lambda_reg = 0.1;
      break;
    case StrategyKind::ReplayEWC:
      cfg.lambda_reg = 0.1;
      break;
    case StrategyKind::CLSER:
      cfg.lambda_reg = 0.1;
      break;
    case StrategyKind::CLSEREWC:
      cfg.lambda_reg = 0.1;
      break;
    case StrategyKind::ESMER:
      cfg.lambda_reg = 0.5;
      break;
    case StrategyKind::DERPP:
      cfg.lambda_reg = 0.5;
      break;
  }
  return cfg;
}

void validate(const SimulationConfig& config) {
  const auto& s = config.schedule;
  if (s.n_generators < 1 || s.dim < 2 || s.n_generators > s.dim)
    throw std::invalid_argument("config: schedule requires 1 <= n_generators <= dim, dim >= 2");
  if (!(s.strength > 0.0) || !std::isfinite(s.strength))
    throw std::invalid_argument("config: strength must be positive and finite");
  if (s.noise_scale < 0.0 || !std::isfinite(s.noise_scale))
    throw std::invalid_argument("config: noise_scale must be >= 0");
  if (s.horizon_months < 1)
    throw std::invalid_argument("config: horizon_months must be >= 1");
  if (!s.release_months.empty()) {
    if (static_cast<int>(s.release_months.size()) != s.n_generators)
      throw std::invalid_argument("config: release_months size must equal n_generators");
    if (s.release_months.front() != 0)
      throw std::invalid_argument(
          "config: first release must be at month 0 (no data before it)");
    for (std::size_t i = 1; i < s.release_months.size(); ++i)
      if (s.release_months[i] <= s.release_months[i - 1])
        throw std::invalid_argument("config: release months must strictly increase");
    if (s.release_months.back() >= s.horizon_months)
      throw std::invalid_argument("config: horizon must cover all releases");
  }
  if (config.model.input_dim != s.dim)
    throw std::invalid_argument("config: model input_dim must equal schedule dim");
  if (config.model.hidden_dim < 1)
    throw std::invalid_argument("config: hidden_dim must be >= 1");
  if (config.model.activation != "tanh")
    throw std::invalid_argument("config: unsupported activation");

  if (!(config.strategy.lr > 0.0) || !std::isfinite(config.strategy.lr))
    throw std::invalid_argument("config: lr must be positive and finite");
  if (config.strategy.lambda_reg < 0.0)
    throw std::invalid_argument("config: lambda_reg must be >= 0");
  if (config.strategy.buffer_capacity < 0)
    throw std::invalid_argument("config: buffer_capacity must be >= 0");
  for (double d : {config.strategy.plastic_decay, config.strategy.stable_decay})
    if (d < 0.0 || d > 1.0)
      throw std::invalid_argument("config: decays must lie in [0, 1]");

  const auto& e = config.execution;
  if (e.monthly_batches < 1)
    throw std::invalid_argument("config: monthly_batches must be >= 1");
  if (e.batch_size < 2 || e.batch_size % 2 != 0)
    throw std::invalid_argument("config: batch_size must be even and >= 2");
  if (e.eval_per_class < 1)
    throw std::invalid_argument("config: eval_per_class must be >= 1");
  if (e.retrain_iters < 1)
    throw std::invalid_argument("config: retrain_iters must be >= 1");
}

SimulationConfig parse_simulation_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") +
                                err.what());
  }
  SimulationConfig cfg = config_from_json(doc);
  validate(cfg);
  return cfg;
}

std::string to_json(const SimulationConfig& config) {
  json doc{{"seed", config.seed},
           {"schedule", schedule_to_json(config.schedule)},
           {"model", model_to_json(config.model)},
           {"strategy", strategy_to_json(config.strategy)},
           {"execution", execution_to_json(config.execution)}};
  return doc.dump();
}

std::uint64_t config_hash(const SimulationConfig& config) {
  return fnv1a64(to_json(config));
}

std::string run_id_for(const SimulationConfig& config) {
  const std::uint64_t h = config_hash(config);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::vector<SimulationConfig> expand_grid(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("grid: not valid JSON: ") +
                                err.what());
  }
  check_keys(doc,
             {"base", "strategies", "monthly_batches", "seeds", "n_seeds",
              "master_seed", "strategy_overrides"},
             "grid");

  SimulationConfig base = default_config();
  if (doc.contains("base")) base = config_from_json(doc.at("base"));

  std::vector<std::string> strategy_names;
  if (doc.contains("strategies")) {
    strategy_names = doc.at("strategies").get<std::vector<std::string>>();
  } else {
    for (StrategyKind kind : kAllStrategies)
      strategy_names.push_back(to_string(kind));
  }

  std::vector<int> batch_settings{base.execution.monthly_batches};
  if (doc.contains("monthly_batches"))
    batch_settings = doc.at("monthly_batches").get<std::vector<int>>();

  std::vector<std::uint64_t> seeds;
  if (doc.contains("seeds")) {
    seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  } else {
    const long n = doc.value("n_seeds", 1L);
    std::uint64_t master = doc.value("master_seed", base.seed);
    for (long i = 0; i < n; ++i) seeds.push_back(splitmix64(master));
  }
  if (seeds.empty()) throw std::invalid_argument("grid: empty seed list");

  std::vector<SimulationConfig> grid;
  for (const std::string& name : strategy_names) {
    for (int mb : batch_settings) {
      SimulationConfig cfg = base;
      cfg.execution.monthly_batches = mb;
      if (name == "FullRetraining") {
        cfg.execution.full_retraining = true;
        cfg.strategy = default_strategy_config(StrategyKind::Naive, mb);
      } else {
        cfg.execution.full_retraining = false;
        cfg.strategy = default_strategy_config(strategy_from_string(name), mb);
      }
      if (doc.contains("strategy_overrides"))
        strategy_from_json(doc.at("strategy_overrides"), cfg.strategy);
      for (std::uint64_t seed : seeds) {
        cfg.seed = seed;
        validate(cfg);
        grid.push_back(cfg);
      }
    }
  }
  return grid;
}

}  // namespace chronocl
