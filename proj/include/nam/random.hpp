#pragma once

#include <cstdint>
#include <random>

namespace nam {

/// Random source used throughout. Callers own their engine; every function
/// that draws randomness takes one explicitly, so runs are reproducible from
/// the seed alone.
using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministically derives an independent stream seed from a master seed
/// and up to three stream coordinates (instance index, attempt, trial, ...).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t s = detail::splitmix64(master ^ 0x6a09e667f3bcc909ULL);
    s = detail::splitmix64(s ^ a);
    s = detail::splitmix64(s ^ (b + 0x3c6ef372fe94f82bULL));
    s = detail::splitmix64(s ^ (c + 0xa54ff53a5f1d36f1ULL));
    return s;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace nam
