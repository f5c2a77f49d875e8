#pragma once

#include <cstdint>
#include <random>

namespace v2v {

/// Stream reserved for scenario generation (vehicle placement and speeds).
/// Vehicles use their own id as stream id.
inline constexpr std::uint64_t kScenarioStream = 0xffff'ffff'0000'0001ULL;

// Reproducible random stream. The engine is std::mt19937_64, whose output is
// fixed by the standard; the distributions below are written out by hand
// because the <random> distributions differ between standard libraries.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer on [lo, hi], unbiased.
  int uniform_int(int lo, int hi);
  /// Marsaglia polar method.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RandomStream build_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return RandomStream(seed, stream_id);
}

}  // namespace v2v
