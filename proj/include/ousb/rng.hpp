#pragma once

#include <cstdint>

#include "ousb/linalg.hpp"

namespace ousb {

// xoshiro256++ with splitmix64 seeding. Self-contained so that streams are
// reproducible bit-for-bit regardless of standard library internals.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Independent stream for worker `stream` of a run seeded with `seed`.
  static Rng derive(uint64_t seed, uint64_t stream);

  uint64_t next_u64();
  double uniform();                 // [0, 1)
  double normal();                  // N(0, 1), Box-Muller
  uint64_t uniform_index(uint64_t n);  // {0, ..., n-1}
  Vector normal_vector(int d);

 private:
  uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ousb
