#pragma once

#include <cstdint>
#include <random>

namespace qkd {

using Rng = std::mt19937_64;

/// SplitMix64 mixing step. Used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a salt.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt));
}

// Stream salts. One stream per role; analysis sweeps derive per-row.
inline constexpr std::uint64_t kSaltAlice = 0xa11ce0ull;
inline constexpr std::uint64_t kSaltBob = 0xb0b0ull;
inline constexpr std::uint64_t kSaltSweep = 0x53eedull;

/// One fair bit.
inline bool random_bit(Rng& rng) {
    return (rng() >> 63) != 0;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double random_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, unbiased.
/// The engine's output sequence is pinned by the standard, and this
/// avoids the implementation-defined std::uniform_int_distribution,
/// so results reproduce across standard libraries.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

}  // namespace qkd
