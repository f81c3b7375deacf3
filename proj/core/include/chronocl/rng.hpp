#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace chronocl {

/// SplitMix64 step; used for seeding and for deriving replicate seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic xoshiro256++ engine with Marsaglia-polar normals.
///
/// Every consumer of randomness in a run gets its own stream, split from the
/// run seed by a fixed stream id, so strategies cannot perturb the data
/// stream and replays are bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  Rng(std::uint64_t master_seed, std::uint64_t stream_id)
      : Rng(derive_stream_seed(master_seed, stream_id)) {}

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, bound), bound >= 1.
  int uniform_int(int bound) {
    const auto b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<int>(x % b);
  }

  /// Standard normal. The polar method produces pairs; the spare value is
  /// part of the engine state so copies of an Rng stay bit-reproducible.
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * scale;
    has_cached_normal_ = true;
    return u * scale;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t derive_stream_seed(std::uint64_t master,
                                          std::uint64_t stream_id) {
    std::uint64_t x = master ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
    return splitmix64(x);
  }

  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Fixed stream ids; per-dataset streams add (id + 1) << 8.
namespace stream_tag {
inline constexpr std::uint64_t kRegistry = 1;
inline constexpr std::uint64_t kTrain = 2;
inline constexpr std::uint64_t kEval = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kStrategy = 5;
inline constexpr std::uint64_t kRetrain = 6;
inline constexpr std::uint64_t kRetrainInit = 7;

inline std::uint64_t for_dataset(std::uint64_t base, int dataset_id) {
  return base + ((static_cast<std::uint64_t>(dataset_id) + 1) << 8);
}
}  // namespace stream_tag

}  // namespace chronocl
