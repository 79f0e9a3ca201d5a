#pragma once

#include <cstdint>
#include <random>

namespace speckle {

// Seeded generator with bit-identical output on every conforming platform.
//
// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
// standard. The library distributions are implementation-defined, so uniform
// and normal variates are derived here:
//   uniform()  = (bits >> 11) * 2^-53                 in [0, 1)
//   normal()   = Box-Muller on two uniforms, cosine branch only
//   below(n)   = rejection sampling on the top bits (no modulo bias)
// Substreams: split(k) seeds a fresh generator from splitmix64(seed ^ splitmix64(k)),
// independent of how many values the parent has drawn.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace speckle
