#pragma once
#include <cstdint>

// Deterministic, platform-independent randomness. xoshiro256** core seeded via
// splitmix64; no libstdc++ distributions (their streams are not portable).
// Sub-streams are derived with rng::derive(seed, tag) so each consumer (coords,
// demands, time windows, ...) draws from an independent generator regardless of
// how many values the others consume. Tags live next to their consumers.

namespace vrplab {

std::uint64_t splitmix64(std::uint64_t& state);

class rng {
 public:
  explicit rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  // [0, bound); bound must be > 0
  std::uint64_t uniform_int(std::uint64_t bound);
  // inclusive range
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal();                         // standard normal, Box-Muller

  // child seed for an independent sub-stream
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag);

 private:
  std::uint64_t s_[4];
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace vrplab
