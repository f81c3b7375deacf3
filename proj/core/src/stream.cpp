#include "chronocl/stream.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace chronocl {

namespace {

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

std::vector<GeneratorSpec> build_registry(const RegistryParams& params,
                                          std::uint64_t seed) {
  const int n = params.n_generators;
  const int dim = params.dim;
  if (dim < 2) throw std::invalid_argument("build_registry: dim must be >= 2");
  if (n < 1) throw std::invalid_argument("build_registry: need at least one generator");
  if (n > dim)
    throw std::invalid_argument(
        "build_registry: n_generators > dim, orthogonal signatures impossible");
  if (!(params.strength > 0.0))
    throw std::invalid_argument("build_registry: strength must be positive");
  if (params.noise_scale < 0.0)
    throw std::invalid_argument("build_registry: noise_scale must be >= 0");

  std::vector<int> months = params.release_months;
  if (months.empty()) {
    if (params.horizon_months < n)
      throw std::invalid_argument("build_registry: horizon shorter than registry");
    months.resize(n);
    for (int i = 0; i < n; ++i)
      months[i] = static_cast<int>(static_cast<long long>(i) *
                                   params.horizon_months / n);
  }
  if (static_cast<int>(months.size()) != n)
    throw std::invalid_argument("build_registry: release_months size mismatch");
  for (int i = 1; i < n; ++i)
    if (months[i] <= months[i - 1])
      throw std::invalid_argument(
          "build_registry: release months must strictly increase");

  Rng rng(seed, stream_tag::kRegistry);
  std::vector<std::vector<double>> basis;
  basis.reserve(n);
  while (static_cast<int>(basis.size()) < n) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    // Two orthogonalization passes keep residual dots near machine epsilon.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : basis) {
        const double p = dot(v, u);
        for (int k = 0; k < dim; ++k) v[k] -= p * u[k];
      }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm < 1e-12) continue;  // degenerate draw, retry
    normalize(v);
    basis.push_back(std::move(v));
  }

  std::vector<GeneratorSpec> registry(n);
  for (int i = 0; i < n; ++i) {
    registry[i].id = i;
    registry[i].release_month = months[i];
    registry[i].signature = std::move(basis[i]);
    registry[i].strength = params.strength;
    registry[i].noise_scale = params.noise_scale;
  }
  return registry;
}

std::vector<GeneratorSpec> build_registry(int n_generators, int dim,
                                          double strength, std::uint64_t seed) {
  RegistryParams params;
  params.n_generators = n_generators;
  params.dim = dim;
  params.strength = strength;
  params.noise_scale = 0.0;
  params.release_months.clear();
  return build_registry(params, seed);
}

ReleaseSchedule ReleaseSchedule::build(std::vector<GeneratorSpec> generators,
                                       int horizon_months,
                                       bool eval_every_month) {
  if (generators.empty())
    throw std::invalid_argument("ReleaseSchedule: empty registry");
  for (std::size_t i = 1; i < generators.size(); ++i)
    if (generators[i].release_month <= generators[i - 1].release_month)
      throw std::invalid_argument("ReleaseSchedule: releases must strictly increase");
  const int last_release = generators.back().release_month;
  if (horizon_months <= last_release)
    throw std::invalid_argument("ReleaseSchedule: horizon must cover all releases");

  ReleaseSchedule schedule;
  schedule.generators = std::move(generators);
  schedule.horizon_months = horizon_months;
  if (eval_every_month) {
    schedule.eval_months.resize(horizon_months);
    for (int m = 0; m < horizon_months; ++m) schedule.eval_months[m] = m;
  } else {
    for (const auto& gen : schedule.generators)
      schedule.eval_months.push_back(gen.release_month);
    schedule.eval_months.push_back(horizon_months - 1);
    std::sort(schedule.eval_months.begin(), schedule.eval_months.end());
    schedule.eval_months.erase(
        std::unique(schedule.eval_months.begin(), schedule.eval_months.end()),
        schedule.eval_months.end());
  }
  return schedule;
}

const GeneratorSpec& ReleaseSchedule::generator(int id) const {
  for (const auto& gen : generators)
    if (gen.id == id) return gen;
  throw std::invalid_argument("ReleaseSchedule: unknown generator id " +
                              std::to_string(id));
}

bool ReleaseSchedule::is_release_month(int month) const {
  for (const auto& gen : generators)
    if (gen.release_month == month) return true;
  return false;
}

bool ReleaseSchedule::is_eval_month(int month) const {
  return std::binary_search(eval_months.begin(), eval_months.end(), month);
}

std::vector<int> ReleaseSchedule::released_ids_newest_first(int month) const {
  std::vector<int> ids;
  for (const auto& gen : generators)
    if (gen.release_month <= month) ids.push_back(gen.id);
  std::reverse(ids.begin(), ids.end());
  return ids;
}

std::vector<int> ReleaseSchedule::released_at_events() const {
  std::vector<int> events(generators.size());
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const auto it = std::lower_bound(eval_months.begin(), eval_months.end(),
                                     generators[i].release_month);
    if (it == eval_months.end() || *it != generators[i].release_month)
      throw std::logic_error("ReleaseSchedule: release month missing from eval calendar");
    events[i] = static_cast<int>(it - eval_months.begin());
  }
  return events;
}

LabeledSample sample_real(int dim, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("sample_real: dim must be >= 1");
  LabeledSample s;
  s.features.resize(dim);
  for (double& x : s.features) x = rng.normal();
  s.label = 0;
  s.origin = kRealOrigin;
  return s;
}

LabeledSample sample_fake(const GeneratorSpec& gen, Rng& rng) {
  const int dim = static_cast<int>(gen.signature.size());
  LabeledSample s = sample_real(dim, rng);
  // Noise is always drawn so the stream's RNG consumption does not depend on
  // generator parameters.
  for (int k = 0; k < dim; ++k) {
    const double noise = rng.normal();
    s.features[k] += gen.strength * gen.signature[k] + gen.noise_scale * noise;
  }
  s.label = 1;
  s.origin = gen.id;
  return s;
}

std::vector<double> selection_probabilities(int n_released) {
  if (n_released < 1)
    throw std::invalid_argument("selection_probabilities: need n_released >= 1");
  // 0.5 * 0.5^i / sum_j 0.5 * 0.5^j, denominator in closed form: 1 - 0.5^n.
  const double denom = 1.0 - std::pow(0.5, n_released);
  std::vector<double> probs(n_released);
  for (int i = 0; i < n_released; ++i)
    probs[i] = std::pow(0.5, i + 1) / denom;
  return probs;
}

int select_dataset(int month, const ReleaseSchedule& schedule, Rng& rng) {
  const std::vector<int> released = schedule.released_ids_newest_first(month);
  if (released.empty())
    throw std::runtime_error("select_dataset: no generator released at month " +
                             std::to_string(month));
  const std::vector<double> probs =
      selection_probabilities(static_cast<int>(released.size()));
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return released[i];
  }
  return released.back();
}

Batch extract_batch(int gen_id, const ReleaseSchedule& schedule, int batch_size,
                    Rng& rng) {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw std::invalid_argument("extract_batch: batch_size must be even and >= 2");
  const GeneratorSpec& gen = schedule.generator(gen_id);
  const int dim = static_cast<int>(gen.signature.size());
  Batch batch;
  batch.source_dataset = gen_id;
  batch.samples.reserve(batch_size);
  for (int i = 0; i < batch_size / 2; ++i)
    batch.samples.push_back(sample_real(dim, rng));
  for (int i = 0; i < batch_size / 2; ++i)
    batch.samples.push_back(sample_fake(gen, rng));
  return batch;
}

std::vector<LabeledSample> make_eval_set(const GeneratorSpec& gen,
                                         int n_per_class, Rng& rng) {
  if (n_per_class < 1)
    throw std::invalid_argument("make_eval_set: n_per_class must be >= 1");
  const int dim = static_cast<int>(gen.signature.size());
  std::vector<LabeledSample> set;
  set.reserve(2 * n_per_class);
  for (int i = 0; i < n_per_class; ++i) set.push_back(sample_real(dim, rng));
  for (int i = 0; i < n_per_class; ++i) set.push_back(sample_fake(gen, rng));
  return set;
}

}  // namespace chronocl
