#include "chronocl/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace chronocl {

namespace {

bool is_strategy_run(const RunRecord& run) {
  return !run.config.execution.full_retraining;
}

// Dataset indices ordered by release event, restricted to released_at > event.
std::vector<int> future_datasets(const AucMatrix& matrix, int event) {
  std::vector<int> future;
  for (int i = 0; i < matrix.n_datasets; ++i)
    if (matrix.released_at[i] > event) future.push_back(i);
  std::sort(future.begin(), future.end(), [&](int a, int b) {
    if (matrix.released_at[a] != matrix.released_at[b])
      return matrix.released_at[a] < matrix.released_at[b];
    return a < b;
  });
  return future;
}

double final_eval_auc(const RunRecord& run) {
  if (run.series.empty())
    throw std::invalid_argument("hypothesis: run without eval events");
  return run.series.back().eval_auc;
}

}  // namespace

double max_transfer(const ResultSet& results) {
  bool any = false;
  double best = 0.0;
  for (const RunRecord& run : results.runs) {
    if (!is_strategy_run(run)) continue;
    for (int t = 0; t < run.matrix.n_events; ++t) {
      const std::vector<int> future = future_datasets(run.matrix, t);
      if (future.empty()) continue;
      const double margin = run.matrix.values[t][future[0]] - 0.5;
      if (!any || margin > best) best = margin;
      any = true;
    }
  }
  if (!any)
    throw std::runtime_error("max_transfer: no (run, event) with a future dataset");
  return best;
}

TransferDecay transfer_decay(const ResultSet& results, bool apply_eval_filter) {
  TransferDecay out;
  double sum = 0.0;
  for (const RunRecord& run : results.runs) {
    if (!is_strategy_run(run)) continue;
    if (apply_eval_filter && final_eval_auc(run) < results.filter_threshold)
      continue;
    for (int t = 0; t < run.matrix.n_events; ++t) {
      const std::vector<int> future = future_datasets(run.matrix, t);
      if (future.size() < 2) continue;
      const double denom = run.matrix.values[t][future[0]] - 0.5;
      const double numer = run.matrix.values[t][future[1]] - 0.5;
      if (std::abs(denom) < kDecayDenomEpsilon) {
        out.excluded_pairs += 1;
        continue;
      }
      sum += numer / denom;
      out.eligible_pairs += 1;
    }
  }
  if (out.eligible_pairs == 0)
    throw std::runtime_error("transfer_decay: no eligible (run, event) pairs");
  out.value = sum / static_cast<double>(out.eligible_pairs);
  return out;
}

double compounded_transfer(double max_transfer, double decay, int k) {
  if (k < 0) throw std::invalid_argument("compounded_transfer: k must be >= 0");
  return 0.5 + max_transfer * std::pow(decay, k);
}

FwtSummary fwt_summary(const ResultSet& results) {
  std::vector<double> values;
  for (const RunRecord& run : results.runs) {
    if (!is_strategy_run(run)) continue;
    for (const MetricPoint& point : run.series)
      if (point.fwt_auc.has_value()) values.push_back(*point.fwt_auc);
  }
  if (values.empty())
    throw std::runtime_error("fwt_summary: no defined FWT-AUC values");
  FwtSummary out;
  out.count = static_cast<long>(values.size());
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - out.mean) * (v - out.mean);
  out.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

DecayEstimate estimate_decay(const ResultSet& results) {
  DecayEstimate est;
  est.t_max = max_transfer(results);
  const TransferDecay decay = transfer_decay(results, true);
  est.t_decay = decay.value;
  est.sample_count = decay.eligible_pairs;
  return est;
}

std::string analysis_json(const ResultSet& results) {
  nlohmann::json doc;
  long strategy_runs = 0;
  long filtered_runs = 0;
  for (const RunRecord& run : results.runs) {
    if (!is_strategy_run(run)) continue;
    strategy_runs += 1;
    if (!run.series.empty() && final_eval_auc(run) >= results.filter_threshold)
      filtered_runs += 1;
  }
  doc["runs"] = strategy_runs;
  doc["runs_passing_filter"] = filtered_runs;
  doc["filter_threshold"] = results.filter_threshold;

  const double peak = max_transfer(results);
  doc["t_max"] = peak;

  // Degenerate sets (nothing past the filter, or every denominator excluded)
  // must still produce a document; the affected fields become null.
  doc["t_decay"] = nullptr;
  doc["t_comp"] = nullptr;
  doc["eligible_pairs"] = 0;
  doc["excluded_pairs"] = 0;
  try {
    const TransferDecay filtered = transfer_decay(results, true);
    doc["t_decay"] = filtered.value;
    doc["eligible_pairs"] = filtered.eligible_pairs;
    doc["excluded_pairs"] = filtered.excluded_pairs;
    std::vector<double> comp;
    for (int k = 0; k <= 6; ++k)
      comp.push_back(compounded_transfer(peak, filtered.value, k));
    doc["t_comp"] = comp;
  } catch (const std::runtime_error& err) {
    doc["t_decay_error"] = err.what();
  }

  doc["t_decay_unfiltered"] = nullptr;
  doc["eligible_pairs_unfiltered"] = 0;
  doc["excluded_pairs_unfiltered"] = 0;
  try {
    const TransferDecay unfiltered = transfer_decay(results, false);
    doc["t_decay_unfiltered"] = unfiltered.value;
    doc["eligible_pairs_unfiltered"] = unfiltered.eligible_pairs;
    doc["excluded_pairs_unfiltered"] = unfiltered.excluded_pairs;
  } catch (const std::runtime_error&) {
  }

  const FwtSummary fwt = fwt_summary(results);
  doc["fwt_mean"] = fwt.mean;
  doc["fwt_std"] = fwt.stddev;
  doc["fwt_count"] = fwt.count;
  return doc.dump(2) + "\n";
}

}  // namespace chronocl
