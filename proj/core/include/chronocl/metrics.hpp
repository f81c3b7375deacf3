#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chronocl/model.hpp"
#include "chronocl/stream.hpp"

namespace chronocl {

/// Mann-Whitney AUC: fraction of (positive, negative) pairs ranked correctly,
/// ties counted 0.5. Rank-sum implementation with average ranks, O(n log n).
/// Throws if either class is missing (the metric is undefined).
double auc(std::span<const double> scores, std::span<const int> labels);

/// R[event][dataset] = AUC of the detector at that event on that dataset's
/// held-out set, including datasets not yet released.
struct AucMatrix {
  std::vector<std::vector<double>> values;
  std::vector<int> released_at;  // per dataset: eval event of its release
  int n_events = 0;
  int n_datasets = 0;
};

/// Mean over datasets released at or before `event`.
double c_auc(const AucMatrix& matrix, int event);

/// Mean over datasets released after `event`; absent when none remain.
std::optional<double> fwt_auc(const AucMatrix& matrix, int event);

/// One matrix row: scores every dataset's eval set with raw logits.
/// Side-effect free; repeated calls return identical rows.
std::vector<double> evaluate_model(
    const ModelState& model,
    const std::vector<std::vector<LabeledSample>>& eval_sets);

struct MetricPoint {
  int event = 0;
  int month = 0;
  double eval_auc = 0.0;  // mean over released datasets (Eval AUC column)
  double c_auc = 0.0;
  std::optional<double> fwt_auc;
};

/// CSV with header "event,month,<dataset ids...>", one row per event.
std::string matrix_to_csv(const AucMatrix& matrix,
                          const std::vector<int>& event_months);

}  // namespace chronocl
