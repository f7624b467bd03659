#pragma once

#include <cstdint>

namespace krrinf {

/// SplitMix64 finaliser; used to seed generators and to derive substreams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed of substream `index` under `base_seed`: hash(base_seed, index).
std::uint64_t substream_seed(std::uint64_t base_seed, std::uint64_t index);

/// xoshiro256** (Blackman & Vigna), seeded through SplitMix64. Bit-identical
/// across platforms; the normal and uniform transforms below are too.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal via the Box-Muller transform (pairs are cached).
  double normal();

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace krrinf
