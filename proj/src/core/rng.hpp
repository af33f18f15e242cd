#pragma once

#include <cstdint>
#include <cstddef>

namespace synteval {

/// Deterministic xoshiro256** generator.
///
/// std::mt19937 + std::*_distribution leave the produced stream
/// implementation-defined; everything here is pinned so that runs are
/// byte-identical across standard libraries and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n >= 1.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal draw via the inverse CDF (one uniform per draw,
    /// so the stream position is independent of rejection behavior).
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

    /// Derive an independent stream for a named sub-task. Mixing is via
    /// SplitMix64 so nearby (seed, stream) pairs decorrelate.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t state_[4];
};

}  // namespace synteval
