#pragma once

#include <cstdint>
#include <random>

#include "nfbt/types.hpp"

namespace nfbt {

/// Seeded random stream. Child streams derived with split() are independent
/// of the parent's consumption state, so a master seed can be fanned out to
/// per-codeword and per-trial streams and the results do not depend on the
/// order (or thread) in which the streams are used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng split(std::uint64_t key) const;
  std::uint64_t seed() const { return seed_; }

  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal();
  // Circularly symmetric complex Gaussian CN(0, variance).
  Complex complex_normal(double variance = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace nfbt
