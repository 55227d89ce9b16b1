#ifndef KOOPMAN_RNG_HPP
#define KOOPMAN_RNG_HPP

#include <cstdint>

#include "koopman/base.hpp"

namespace koopman {

// splitmix64; fully specified so that seeded runs are byte-identical across
// platforms (std:: distributions are implementation-defined and unusable here).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // uniform integer in [0, n)
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

  cx next_complex(double scale = 1.0) {
    return cx(next_range(-scale, scale), next_range(-scale, scale));
  }

  // derive an independent stream
  SplitMix64 fork(std::uint64_t salt) {
    return SplitMix64(next_u64() ^ (salt * 0xD1B54A32D192ED03ULL));
  }

 private:
  std::uint64_t state_;
};

}  // namespace koopman

#endif
