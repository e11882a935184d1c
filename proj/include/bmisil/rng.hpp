#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bmisil {

/// SplitMix64 generator. The sequence is fully specified so streams are
/// reproducible in any language: state += 0x9E3779B97F4A7C15, then the
/// standard two-round xor-shift-multiply finalizer.
class Rng {
public:
    explicit constexpr Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform in [0, 1) from the top 53 bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be > 0.
    constexpr std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via Box-Muller; consumes two uniforms.
    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Derives an independent stream seed from a base seed and stream indices.
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t a,
                                          std::uint64_t b = 0) noexcept {
        return mix(mix(seed + 0x9E3779B97F4A7C15ULL * (a + 1)) ^ (b * 0xD1B54A32D192ED03ULL));
    }

private:
    std::uint64_t state_;
};

}  // namespace bmisil
