#pragma once

#include <cstdint>
#include <random>

namespace tetrodiff {

/// Seeded 64-bit Mersenne twister with a platform-independent U[0,1) draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

  /// 53 random bits mapped to [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tetrodiff
