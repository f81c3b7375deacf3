#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chronocl/run_record.hpp"

namespace chronocl {

/// Collection of finished runs plus the eval-AUC filter used by the decay
/// estimator. Baseline (full-retraining) records are ignored by the
/// estimators below; they quantify continual-learning strategies only.
struct ResultSet {
  std::vector<RunRecord> runs;
  double filter_threshold = 0.75;
  std::vector<std::pair<std::string, std::string>> failures;  // (label, error)
};

/// Ratios with |denominator| below this are excluded (and counted).
inline constexpr double kDecayDenomEpsilon = 1e-3;

/// Peak next-release transferability: max over runs and events of
/// R[t][next released dataset] - 0.5. Unfiltered. Throws when no (run, event)
/// has a future dataset.
double max_transfer(const ResultSet& results);

struct TransferDecay {
  double value = 0.0;
  long eligible_pairs = 0;
  long excluded_pairs = 0;  // |denominator| < epsilon
};

/// Mean over eligible (run, event) of
/// (R[t][second next] - 0.5) / (R[t][next] - 0.5).
/// With apply_eval_filter, only runs whose final-event eval AUC reaches the
/// set's threshold participate. Throws when no pair is eligible.
TransferDecay transfer_decay(const ResultSet& results,
                             bool apply_eval_filter = true);

/// Compounded k-step generalization: 0.5 + max_transfer * decay^k.
double compounded_transfer(double max_transfer, double decay, int k);

struct FwtSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  long count = 0;
};

/// Mean/std over every defined per-event FWT-AUC value across runs.
FwtSummary fwt_summary(const ResultSet& results);

struct DecayEstimate {
  double t_max = -0.5;
  double t_decay = 0.0;
  long sample_count = 0;
};

DecayEstimate estimate_decay(const ResultSet& results);

/// The `analyze` document: {t_max, t_decay, t_comp per k in 0..6, fwt_mean,
/// fwt_std, eligible_pairs, excluded_pairs, ...}, serialized JSON.
std::string analysis_json(const ResultSet& results);

}  // namespace chronocl
