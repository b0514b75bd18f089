#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ek {

// All randomness goes through this engine and the helpers below, which are
// specified bit-for-bit (unlike the std distributions).
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_int(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

// Box-Muller, one draw per call.
inline double normal(Rng& rng) {
  const double u = 1.0 - uniform01(rng), v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Index drawn proportionally to nonnegative `w`.
template <class Vec>
int categorical(Rng& rng, const Vec& w) {
  double total = 0.0;
  for (double v : w) total += v;
  double u = uniform01(rng) * total;
  int last = -1;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) {
    if (w[i] <= 0.0) continue;
    last = i;
    if (u < w[i]) return i;
    u -= w[i];
  }
  return last;
}

}  // namespace ek
