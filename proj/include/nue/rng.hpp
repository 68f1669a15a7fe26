#pragma once

#include <cstdint>

namespace nue {

// SplitMix64; fixed output sequence for a given seed on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // uniform in [0,1) with 53 random bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // uniform in (0,1)
  double open_uniform() {
    double u;
    do u = uniform();
    while (u == 0.0);
    return u;
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  SplitMix64 split(std::uint64_t stream) const { return SplitMix64(state_ ^ (stream * 0xD1B54A32D192ED03ULL)); }

 private:
  std::uint64_t state_;
};

}  // namespace nue
