#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ads3d {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent key and a stream id.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t stream) noexcept {
    return mix64(key ^ mix64(stream + 0x9E3779B97F4A7C15ULL));
}

/// Counter-based generator: the n-th draw of a stream is
/// mix64(key + n * 0x9E3779B97F4A7C15), n = 1, 2, ...
/// The algorithm is part of the file-level reproducibility contract and
/// must not change.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}

    std::uint64_t next_u64() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % n;
    }

    /// Standard normal via Box-Muller, cosine branch only (two uniforms per draw).
    double normal() noexcept {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace ads3d
