#pragma once

#include <cstdint>
#include <random>

namespace ood {

/// Seedable generator with portable output. The engine is std::mt19937_64,
/// whose output sequence is pinned by the standard; the uniform and normal
/// mappings below are implemented here rather than through std::*_distribution
/// because the standard leaves distribution algorithms implementation-defined
/// and their output differs across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_open0() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; consumes exactly two engine draws.
    double normal();

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    /// Fisher-Yates shuffle of indices 0..n-1.
    template <typename IndexVector>
    void shuffle(IndexVector& idx) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(idx[i - 1], idx[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 step; used to derive independent sub-seeds from one user seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ood
