#pragma once

#include <cstdint>
#include <vector>

namespace partclass::nd {

// Deterministic pseudo-random stream: xoshiro256** seeded through splitmix64.
// Pure integer arithmetic, so the same seed yields the same stream on every
// platform. std::mt19937 + <random> distributions are avoided on purpose:
// their output is not specified across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform();

    // Uniform in [lo, hi).
    double uniform(double lo, double hi);

    // Uniform integer in [0, n). n must be > 0. Rejection-sampled, unbiased.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via Box-Muller. Caches the second deviate.
    double normal();

    // Fisher-Yates over indices 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

    // Derive an independent seed from this stream (for sub-generators).
    std::uint64_t fork_seed() { return next_u64(); }

  private:
    std::uint64_t state_[4];
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// Stateless mix used to derive per-item seeds from a base seed and an index.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace partclass::nd
