#pragma once

// Portable random helpers. The engine output is fixed by the standard, but the
// std:: distributions are implementation-defined, so every draw that feeds a
// result file goes through the conversions below instead.

#include <cstdint>
#include <random>
#include <string_view>

namespace abn {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % bound;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Independent stream for one (study, replicate) task. The tuple is mixed
/// through a keyed hash so neighbouring replicates share no seed structure.
inline Rng derive_rng(std::uint64_t master_seed, std::string_view label,
                      std::uint64_t replicate) {
    std::uint64_t h = detail::splitmix64(master_seed);
    h = detail::splitmix64(h ^ detail::fnv1a(label));
    h = detail::splitmix64(h ^ replicate);
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(replicate),
                      static_cast<std::uint32_t>(master_seed)};
    return Rng(seq);
}

}  // namespace abn
