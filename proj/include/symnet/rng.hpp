/* rng.hpp
 *
 * Deterministic, platform-independent random streams.  Monte-Carlo checks
 * derive one stream per sample index so results do not depend on how samples
 * are split across workers; simulation uses a single sequential stream.
 */
#pragma once

#include <cstdint>

namespace symnet {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}
  /* independent stream for one sample of a seeded experiment */
  Rng(std::uint64_t seed, std::uint64_t index)
      : state(seed ^ (0x9e3779b97f4a7c15ull * (index + 1))) {
    next();  // decorrelate neighbouring indices
  }

  std::uint64_t next() { return splitmix64(state); }

  /* uniform in [0, 1) with 53 random bits */
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /* uniform integer in [0, n), n > 0 */
  std::uint64_t below(std::uint64_t n) {
    /* multiply-shift; bias is negligible for the small n used here */
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }
};

}  // namespace symnet
