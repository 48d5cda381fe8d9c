#pragma once

#include <cstdint>
#include <random>

namespace treereg {

// Deterministic random number source. The engine is std::mt19937_64, whose
// output sequence is pinned by the standard, and the normal variates are
// produced by an in-house Box-Muller transform because the distribution
// adaptors in <random> are implementation defined. Two builds of this library
// therefore draw identical streams for identical seeds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Stream for one simulation replicate. Distinct (seed, replicate) pairs get
  // well separated engine states, and the mapping does not depend on how many
  // replicates run or in which order.
  static Rng for_replicate(std::uint64_t seed, std::uint64_t replicate);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Standard normal via Box-Muller; generates pairs and caches the spare.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace treereg
