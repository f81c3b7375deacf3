#include "chronocl/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "chronocl/textio.hpp"

namespace chronocl {

double auc(std::span<const double> scores, std::span<const int> labels) {
  const std::size_t n = scores.size();
  if (labels.size() != n)
    throw std::invalid_argument("auc: scores/labels size mismatch");
  std::size_t positives = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("auc: labels must be 0/1");
    positives += static_cast<std::size_t>(y);
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw std::invalid_argument("auc: undefined for single-class labels");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks across tie groups (1-based ranks).
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) positive_rank_sum += avg_rank;
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double m = static_cast<double>(negatives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * m);
}

double c_auc(const AucMatrix& matrix, int event) {
  if (event < 0 || event >= matrix.n_events)
    throw std::invalid_argument("c_auc: event out of range");
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < matrix.n_datasets; ++i) {
    if (matrix.released_at[i] <= event) {
      sum += matrix.values[event][i];
      ++count;
    }
  }
  if (count == 0)
    throw std::invalid_argument("c_auc: no dataset released at event");
  return sum / count;
}

std::optional<double> fwt_auc(const AucMatrix& matrix, int event) {
  if (event < 0 || event >= matrix.n_events)
    throw std::invalid_argument("fwt_auc: event out of range");
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < matrix.n_datasets; ++i) {
    if (matrix.released_at[i] > event) {
      sum += matrix.values[event][i];
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return sum / count;
}

std::vector<double> evaluate_model(
    const ModelState& model,
    const std::vector<std::vector<LabeledSample>>& eval_sets) {
  std::vector<double> row;
  row.reserve(eval_sets.size());
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& set : eval_sets) {
    scores.clear();
    labels.clear();
    scores.reserve(set.size());
    labels.reserve(set.size());
    for (const auto& sample : set) {
      scores.push_back(forward(model, sample.features));
      labels.push_back(sample.label);
    }
    row.push_back(auc(scores, labels));
  }
  return row;
}

std::string matrix_to_csv(const AucMatrix& matrix,
                          const std::vector<int>& event_months) {
  if (static_cast<int>(event_months.size()) != matrix.n_events)
    throw std::invalid_argument("matrix_to_csv: month list size mismatch");
  std::string out = "event,month";
  for (int i = 0; i < matrix.n_datasets; ++i)
    out += "," + std::to_string(i);
  out += "\n";
  for (int t = 0; t < matrix.n_events; ++t) {
    out += std::to_string(t) + "," + std::to_string(event_months[t]);
    for (int i = 0; i < matrix.n_datasets; ++i)
      out += "," + format_double(matrix.values[t][i]);
    out += "\n";
  }
  return out;
}

}  // namespace chronocl
