#pragma once

#include <cstdint>
#include <random>

namespace snmdp {

/**
 * Portable seeded generator for instance construction.
 *
 * The bit stream is std::mt19937_64 (MT19937-64, whose 10000th output from
 * the default seed 5489 is fixed by the C++ standard at 9981545732273789042).
 * Doubles are drawn as the top 53 bits scaled by 2^-53, so uniform01() lies
 * in [0, 1) and is identical on every conforming platform. The standard
 * library distributions are avoided because their algorithms are
 * implementation-defined.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace snmdp
