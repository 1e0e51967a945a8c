#pragma once

#include <cstdint>
#include <random>

namespace cyclegen {

// Seeded generator whose derived draws are bit-identical across standard
// libraries (std::uniform_*_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal draw via Box-Muller (one value per call).
  double normal();

  // Child stream for an independent sub-task (e.g. the k-th candidate).
  Rng split(std::uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
};

}  // namespace cyclegen
