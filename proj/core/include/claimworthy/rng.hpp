#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace claimworthy::rng {

// Every random draw in the project flows through std::mt19937 (the 32-bit
// Mersenne Twister, whose raw output sequence is pinned by the C++ standard)
// combined with the hand-rolled samplers below. Standard-library
// distributions are avoided on purpose: their output is not specified across
// implementations, and golden values in the test suite must be portable.
using Engine = std::mt19937;

inline Engine make_engine(std::uint32_t seed) { return Engine{seed}; }

// Uniform integer in [0, bound) via rejection sampling (no modulo bias).
inline std::uint32_t bounded(Engine& engine, std::uint32_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t span = std::uint64_t{1} << 32;
  const std::uint32_t limit =
      static_cast<std::uint32_t>(span - (span % bound));
  std::uint32_t draw = engine();
  while (limit != 0 && draw >= limit) draw = engine();
  return draw % bound;
}

// Uniform real in [0, 1), 32 bits of resolution.
inline double unit_real(Engine& engine) {
  return static_cast<double>(engine()) * 0x1p-32;
}

// Fair coin from the top bit of one draw.
inline bool fair_bit(Engine& engine) { return (engine() >> 31) != 0; }

// Standard normal via Box-Muller; consumes exactly two draws per call.
inline double normal(Engine& engine) {
  const double u1 = (static_cast<double>(engine()) + 1.0) * 0x1p-32;  // (0,1]
  const double u2 = static_cast<double>(engine()) * 0x1p-32;          // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Fisher-Yates shuffle driven by bounded().
template <typename T>
void shuffle(std::vector<T>& values, Engine& engine) {
  if (values.size() < 2) return;
  for (std::size_t i = values.size() - 1; i > 0; --i) {
    const std::uint32_t j = bounded(engine, static_cast<std::uint32_t>(i + 1));
    std::swap(values[i], values[j]);
  }
}

}  // namespace claimworthy::rng
