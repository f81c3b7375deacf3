#pragma once

#include <cstdint>
#include <vector>

#include "chronocl/rng.hpp"

namespace chronocl {

/// Max allowed |dot| between two registry signatures.
inline constexpr double kOrthogonalityTolerance = 0.05;

/// Origin marker for real samples (fakes carry their generator id).
inline constexpr int kRealOrigin = -1;
/// Origin marker for samples re-materialized from a replay buffer.
inline constexpr int kBufferOrigin = -2;

/// A synthetic deepfake generator: fakes are real draws shifted along a unit
/// signature direction, plus optional isotropic noise.
struct GeneratorSpec {
  int id = 0;
  int release_month = 0;
  std::vector<double> signature;
  double strength = 1.0;
  double noise_scale = 0.0;
};

struct RegistryParams {
  int n_generators = 6;
  int dim = 32;
  double strength = 3.0;
  double noise_scale = 0.1;
  std::vector<int> release_months;  // empty -> spread evenly over the horizon
  int horizon_months = 80;
};

/// Near-orthogonal signatures via Gram-Schmidt over random directions.
/// Requires n_generators <= dim, dim >= 2, strength > 0.
std::vector<GeneratorSpec> build_registry(const RegistryParams& params,
                                          std::uint64_t seed);
std::vector<GeneratorSpec> build_registry(int n_generators, int dim,
                                          double strength, std::uint64_t seed);

/// Ordered release timeline plus the evaluation calendar.
struct ReleaseSchedule {
  std::vector<GeneratorSpec> generators;
  int horizon_months = 0;
  std::vector<int> eval_months;  // sorted unique release months + final month

  /// Validates ordering/coverage invariants and derives eval_months.
  static ReleaseSchedule build(std::vector<GeneratorSpec> generators,
                               int horizon_months,
                               bool eval_every_month = false);

  int n_datasets() const { return static_cast<int>(generators.size()); }
  const GeneratorSpec& generator(int id) const;
  bool is_release_month(int month) const;
  bool is_eval_month(int month) const;
  /// Ids of generators released by `month`, newest release first.
  std::vector<int> released_ids_newest_first(int month) const;
  /// Per dataset: index of the eval event at which it was released.
  std::vector<int> released_at_events() const;
};

struct LabeledSample {
  std::vector<double> features;
  int label = 0;  // 0 real, 1 fake
  int origin = kRealOrigin;
};

struct Batch {
  std::vector<LabeledSample> samples;
  int source_dataset = kRealOrigin;
};

/// Standard-normal feature vector, label 0.
LabeledSample sample_real(int dim, Rng& rng);

/// real draw + strength * signature + noise_scale * isotropic noise, label 1.
LabeledSample sample_fake(const GeneratorSpec& gen, Rng& rng);

/// Exponentially weighted selection over the released set, newest first:
/// P(i) = 0.5 * 0.5^i normalized over the i = 0..n-1 released datasets.
std::vector<double> selection_probabilities(int n_released);

/// Draws a released generator id for `month` under selection_probabilities.
int select_dataset(int month, const ReleaseSchedule& schedule, Rng& rng);

/// Class-balanced batch: batch_size/2 reals + batch_size/2 fakes from gen_id.
Batch extract_batch(int gen_id, const ReleaseSchedule& schedule, int batch_size,
                    Rng& rng);

/// n_per_class reals + n_per_class fakes. Callers must pass an Rng split from
/// the evaluation stream so held-out data never overlaps training draws.
std::vector<LabeledSample> make_eval_set(const GeneratorSpec& gen,
                                         int n_per_class, Rng& rng);

}  // namespace chronocl
