#include "chronocl/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "chronocl/config.hpp"
#include "chronocl/textio.hpp"

namespace chronocl {

namespace {

using nlohmann::json;

struct RunSetup {
  ReleaseSchedule schedule;
  std::vector<std::vector<LabeledSample>> eval_sets;
  std::vector<int> released_at;
};

RunSetup prepare(const SimulationConfig& config) {
  RunSetup setup;
  std::vector<GeneratorSpec> registry =
      build_registry(config.schedule, config.seed);
  setup.schedule =
      ReleaseSchedule::build(std::move(registry), config.schedule.horizon_months,
                             config.execution.eval_every_month);
  setup.released_at = setup.schedule.released_at_events();
  setup.eval_sets.reserve(setup.schedule.n_datasets());
  for (const GeneratorSpec& gen : setup.schedule.generators) {
    Rng eval_rng(config.seed, stream_tag::for_dataset(stream_tag::kEval, gen.id));
    setup.eval_sets.push_back(
        make_eval_set(gen, config.execution.eval_per_class, eval_rng));
  }
  return setup;
}

void check_finite_loss(double loss, int month, int batch_index) {
  if (!std::isfinite(loss))
    throw std::runtime_error(
        "simulation diverged: non-finite loss at month " + std::to_string(month) +
        ", batch " + std::to_string(batch_index) +
        " (lower the learning rate or regularizer weights)");
}

void record_event(RunRecord& record, const RunSetup& setup, int event,
                  int month, const ModelState& eval_model) {
  const std::vector<double> row = evaluate_model(eval_model, setup.eval_sets);
  record.matrix.values.push_back(row);
  record.matrix.n_events = static_cast<int>(record.matrix.values.size());

  MetricPoint point;
  point.event = event;
  point.month = month;
  point.c_auc = c_auc(record.matrix, event);
  point.eval_auc = point.c_auc;  // mean over released datasets, by definition
  point.fwt_auc = fwt_auc(record.matrix, event);
  record.series.push_back(point);
}

}  // namespace

RunRecord run_simulation(const SimulationConfig& config,
                         const StepObserver& observer) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  RunRecord record;
  record.config = config;
  record.run_id = run_id_for(config);

  RunSetup setup = prepare(config);
  record.matrix.n_datasets = setup.schedule.n_datasets();
  record.matrix.released_at = setup.released_at;

  Rng train_rng(config.seed, stream_tag::kTrain);
  Rng strategy_rng(config.seed, stream_tag::kStrategy);
  Rng init_rng(config.seed, stream_tag::kInit);

  StrategyState state = make_strategy_state(
      config.strategy, config.model, config.execution.batch_size, init_rng);

  int event = 0;
  for (int month = 0; month < setup.schedule.horizon_months; ++month) {
    if (setup.schedule.is_release_month(month) && uses_ewc(config.strategy.kind))
      consolidate_anchor(state);
    for (int b = 0; b < config.execution.monthly_batches; ++b) {
      const int gen_id = select_dataset(month, setup.schedule, train_rng);
      const Batch batch = extract_batch(
          gen_id, setup.schedule, config.execution.batch_size, train_rng);
      const double loss = strategy_step(state, batch, strategy_rng);
      check_finite_loss(loss, month, b);
      record.ledger.samples_processed += config.execution.batch_size;
      record.ledger.unique_samples += config.execution.batch_size;
      record.ledger.parameter_updates += 1;
      if (observer) observer(month, b, state);
    }
    if (setup.schedule.is_eval_month(month)) {
      ModelState eval_model;
      eval_model.arch = config.model;
      eval_model.params = inference_params(state);
      record_event(record, setup, event, month, eval_model);
      ++event;
    }
  }

  record.duration_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return record;
}

RunRecord run_full_retraining(const SimulationConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  RunRecord record;
  SimulationConfig cfg = config;
  cfg.execution.full_retraining = true;
  record.config = cfg;
  record.run_id = run_id_for(cfg);

  RunSetup setup = prepare(cfg);
  record.matrix.n_datasets = setup.schedule.n_datasets();
  record.matrix.released_at = setup.released_at;

  Rng data_rng(cfg.seed, stream_tag::kRetrain);
  const long iters = cfg.execution.retrain_iters;
  const double base_lr = cfg.strategy.lr;

  ModelState model = ModelState::zeros(cfg.model);
  int event = 0;
  int retrain_count = 0;
  for (int month = 0; month < setup.schedule.horizon_months; ++month) {
    if (setup.schedule.is_release_month(month)) {
      // Fresh model and optimizer per adaptation, trained on the union of
      // everything released so far.
      Rng init_rng(cfg.seed,
                   stream_tag::for_dataset(stream_tag::kRetrainInit, retrain_count));
      model = ModelState::random_init(cfg.model, init_rng);
      OptimizerState opt = OptimizerState::make(cfg.model.param_count(), base_lr);
      const std::vector<int> released =
          setup.schedule.released_ids_newest_first(month);
      for (long iter = 0; iter < iters; ++iter) {
        opt.lr = cosine_lr(iter, base_lr, iters);
        std::vector<LabeledSample> pooled;
        pooled.reserve(released.size() * cfg.execution.batch_size);
        for (int id : released) {
          Batch batch = extract_batch(id, setup.schedule,
                                      cfg.execution.batch_size, data_rng);
          for (auto& sample : batch.samples) pooled.push_back(std::move(sample));
        }
        const LossGrad lg = bce_loss_grad(model, pooled);
        check_finite_loss(lg.loss, month, static_cast<int>(iter));
        adamw_step(model, opt, lg.grad);
        record.ledger.samples_processed += static_cast<long long>(pooled.size());
        record.ledger.unique_samples += static_cast<long long>(pooled.size());
        record.ledger.parameter_updates += 1;
      }
      ++retrain_count;
    }
    if (setup.schedule.is_eval_month(month)) {
      record_event(record, setup, event, month, model);
      ++event;
    }
  }

  record.duration_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  return record;
}

ResultSet run_sweep(const std::vector<SimulationConfig>& grid, int jobs) {
  if (grid.empty()) throw std::invalid_argument("run_sweep: empty grid");
  if (jobs < 1) jobs = 1;

  ResultSet results;
  std::vector<RunRecord> records(grid.size());
  std::vector<char> ok(grid.size(), 0);
  std::vector<std::pair<std::string, std::string>> failures;
  std::mutex failures_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        records[i] = grid[i].execution.full_retraining
                         ? run_full_retraining(grid[i])
                         : run_simulation(grid[i]);
        ok[i] = 1;
      } catch (const std::exception& err) {
        std::lock_guard<std::mutex> lock(failures_mutex);
        failures.emplace_back(run_id_for(grid[i]), err.what());
      }
    }
  };

  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < grid.size(); ++i)
    if (ok[i]) results.runs.push_back(std::move(records[i]));

  // Canonical order: by run id (configs hash uniquely), so sweep results do
  // not depend on grid order or scheduling.
  std::sort(results.runs.begin(), results.runs.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return a.run_id < b.run_id;
            });
  std::sort(failures.begin(), failures.end());
  results.failures = std::move(failures);
  return results;
}

std::string strategy_label(const RunRecord& record) {
  return record.config.execution.full_retraining
             ? "FullRetraining"
             : to_string(record.config.strategy.kind);
}

std::string jsonl_line(const RunRecord& record, int event_index) {
  const MetricPoint& point = record.series.at(event_index);
  json obj;
  obj["run_id"] = record.run_id;
  obj["strategy"] = strategy_label(record);
  obj["seed"] = record.config.seed;
  obj["monthly_batches"] = record.config.execution.monthly_batches;
  obj["event"] = point.event;
  obj["month"] = point.month;
  obj["eval_auc"] = point.eval_auc;
  obj["c_auc"] = point.c_auc;
  if (point.fwt_auc.has_value())
    obj["fwt_auc"] = *point.fwt_auc;
  else
    obj["fwt_auc"] = nullptr;
  obj["row"] = record.matrix.values.at(event_index);
  obj["released_at"] = record.matrix.released_at;
  obj["ledger"] = json{{"samples_processed", record.ledger.samples_processed},
                       {"unique_samples", record.ledger.unique_samples},
                       {"parameter_updates", record.ledger.parameter_updates}};
  return obj.dump();
}

namespace {

std::string runs_to_jsonl(const ResultSet& results) {
  std::string out;
  for (const RunRecord& record : results.runs)
    for (std::size_t e = 0; e < record.series.size(); ++e)
      out += jsonl_line(record, static_cast<int>(e)) + "\n";
  return out;
}

std::vector<int> event_months(const RunRecord& record) {
  std::vector<int> months;
  months.reserve(record.series.size());
  for (const MetricPoint& p : record.series) months.push_back(p.month);
  return months;
}

// (strategy label, monthly_batches) -> runs, in deterministic key order.
std::map<std::pair<std::string, int>, std::vector<const RunRecord*>>
group_runs(const ResultSet& results) {
  std::map<std::pair<std::string, int>, std::vector<const RunRecord*>> groups;
  for (const RunRecord& record : results.runs)
    groups[{strategy_label(record), record.config.execution.monthly_batches}]
        .push_back(&record);
  return groups;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double m) {
  if (v.empty()) return 0.0;
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return std::sqrt(var / static_cast<double>(v.size()));
}

}  // namespace

void write_run_artifacts(const RunRecord& record,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  json doc;
  doc["run_id"] = record.run_id;
  doc["mode"] = record.config.execution.full_retraining ? "retrain" : "cl";
  doc["config"] = json::parse(to_json(record.config));
  doc["duration_ms"] = record.duration_ms;
  json events = json::array();
  for (std::size_t e = 0; e < record.series.size(); ++e)
    events.push_back(json::parse(jsonl_line(record, static_cast<int>(e))));
  doc["events"] = events;
  write_text_file(out_dir / "record.json", doc.dump(2) + "\n");

  ResultSet single;
  single.runs.push_back(record);
  write_text_file(out_dir / "runs.jsonl", runs_to_jsonl(single));
  write_text_file(out_dir / "auc_matrix.csv",
                  matrix_to_csv(record.matrix, event_months(record)));
}

void emit_reports(const ResultSet& results,
                  const std::filesystem::path& out_dir) {
  if (results.runs.empty())
    throw std::invalid_argument("emit_reports: empty ResultSet");
  std::filesystem::create_directories(out_dir);

  write_text_file(out_dir / "runs.jsonl", runs_to_jsonl(results));

  const auto groups = group_runs(results);

  // Per-strategy C-AUC trajectory, mean/std over seeds.
  std::string cauc = "strategy,monthly_batches,event,month,mean_c_auc,std_c_auc,n_runs\n";
  for (const auto& [key, runs] : groups) {
    std::size_t n_events = runs.front()->series.size();
    for (const RunRecord* r : runs) n_events = std::min(n_events, r->series.size());
    for (std::size_t e = 0; e < n_events; ++e) {
      std::vector<double> values;
      for (const RunRecord* r : runs) values.push_back(r->series[e].c_auc);
      const double m = mean(values);
      cauc += key.first + "," + std::to_string(key.second) + "," +
              std::to_string(e) + "," +
              std::to_string(runs.front()->series[e].month) + "," +
              format_double(m) + "," + format_double(population_std(values, m)) +
              "," + std::to_string(values.size()) + "\n";
    }
  }
  write_text_file(out_dir / "cauc_timeseries.csv", cauc);

  // Spider-chart data: per-dataset AUC by event.
  std::string spider = "strategy,monthly_batches,event,month,dataset,mean_auc\n";
  for (const auto& [key, runs] : groups) {
    std::size_t n_events = runs.front()->series.size();
    for (const RunRecord* r : runs) n_events = std::min(n_events, r->series.size());
    const int n_datasets = runs.front()->matrix.n_datasets;
    for (std::size_t e = 0; e < n_events; ++e) {
      for (int d = 0; d < n_datasets; ++d) {
        std::vector<double> values;
        for (const RunRecord* r : runs) values.push_back(r->matrix.values[e][d]);
        spider += key.first + "," + std::to_string(key.second) + "," +
                  std::to_string(e) + "," +
                  std::to_string(runs.front()->series[e].month) + "," +
                  std::to_string(d) + "," + format_double(mean(values)) + "\n";
      }
    }
  }
  write_text_file(out_dir / "spider.csv", spider);

  write_text_file(out_dir / "hypothesis.json", analysis_json(results));

  // Summary in the shape of the headline results table.
  std::string summary =
      "strategy,monthly_batches,auc,mean_c_auc,mean_fwt_auc,n_runs\n";
  for (const auto& [key, runs] : groups) {
    std::vector<double> final_auc, c_aucs, fwts;
    for (const RunRecord* r : runs) {
      final_auc.push_back(r->series.back().eval_auc);
      for (const MetricPoint& p : r->series) {
        c_aucs.push_back(p.c_auc);
        if (p.fwt_auc.has_value()) fwts.push_back(*p.fwt_auc);
      }
    }
    summary += key.first + "," + std::to_string(key.second) + "," +
               format_double(mean(final_auc)) + "," + format_double(mean(c_aucs)) +
               "," + (fwts.empty() ? std::string("") : format_double(mean(fwts))) +
               "," + std::to_string(runs.size()) + "\n";
  }
  write_text_file(out_dir / "summary.csv", summary);
}

ResultSet load_results(const std::filesystem::path& dir,
                       double filter_threshold) {
  const std::filesystem::path file = dir / "runs.jsonl";
  const std::string text = read_text_file(file);

  std::map<std::string, RunRecord> by_id;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const json obj = json::parse(line);
    const std::string run_id = obj.at("run_id");
    RunRecord& record = by_id[run_id];
    if (record.run_id.empty()) {
      record.run_id = run_id;
      record.config = default_config();
      record.config.seed = obj.at("seed").get<std::uint64_t>();
      record.config.execution.monthly_batches = obj.at("monthly_batches");
      const std::string label = obj.at("strategy");
      if (label == "FullRetraining") {
        record.config.execution.full_retraining = true;
      } else {
        record.config.strategy.kind = strategy_from_string(label);
      }
      record.matrix.released_at = obj.at("released_at").get<std::vector<int>>();
      record.matrix.n_datasets =
          static_cast<int>(record.matrix.released_at.size());
    }
    MetricPoint point;
    point.event = obj.at("event");
    point.month = obj.at("month");
    point.eval_auc = obj.at("eval_auc");
    point.c_auc = obj.at("c_auc");
    if (!obj.at("fwt_auc").is_null())
      point.fwt_auc = obj.at("fwt_auc").get<double>();
    record.series.push_back(point);
    record.matrix.values.push_back(obj.at("row").get<std::vector<double>>());
    record.matrix.n_events = static_cast<int>(record.matrix.values.size());
    record.ledger.samples_processed = obj.at("ledger").at("samples_processed");
    record.ledger.unique_samples = obj.at("ledger").at("unique_samples");
    record.ledger.parameter_updates = obj.at("ledger").at("parameter_updates");
  }
  if (by_id.empty())
    throw std::runtime_error("load_results: no records in " + file.string());

  ResultSet results;
  results.filter_threshold = filter_threshold;
  for (auto& [id, record] : by_id) results.runs.push_back(std::move(record));
  std::sort(results.runs.begin(), results.runs.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return a.run_id < b.run_id;
            });
  return results;
}

}  // namespace chronocl
