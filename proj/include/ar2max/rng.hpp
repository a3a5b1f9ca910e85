#pragma once

#include <cstdint>

namespace ar2max {

// splitmix64: the generator recorded in all reproducibility metadata.
// One instance per replication / per worker; never shared across threads.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // uniform on the open interval (0,1); safe to feed into quantile functions
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }
};

// Derived stream seed for replication/worker `index` under a base seed.
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 g(base ^ (0xA0761D6478BD642FULL * (index + 1)));
  return g.next();
}

inline const char* generator_name() { return "splitmix64"; }

}  // namespace ar2max
