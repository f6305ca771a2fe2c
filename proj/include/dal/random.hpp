#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace dal {

/// SplitMix64 finalizer; used to expand seeds and derive substreams.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic (seed, index) -> seed derivation for independent substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// xoshiro256** 1.0 (Blackman & Vigna). The distribution helpers below are
/// implemented here rather than taken from <random> because the standard
/// distributions are implementation-defined and would break cross-platform
/// bit-reproducibility.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via the Marsaglia polar method.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }
    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates permutation of [0, n).
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dal
