// rng.hpp — deterministic seeding and portable variate generation
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace qtb {

// ---- substreams ----
//
// Every stochastic routine takes (seed, index) and derives an independent
// engine from it, so sample i of an ensemble is reproducible in isolation.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= (index + 1) * 0x9e3779b97f4a7c15ull;
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{std::uint32_t(a), std::uint32_t(a >> 32),
                      std::uint32_t(b), std::uint32_t(b >> 32)};
    return std::mt19937_64(seq);
}

// ---- variates ----
//
// std::uniform_real_distribution / std::normal_distribution are not required
// to produce identical streams across standard libraries, so the draws are
// spelled out.

inline double uniform01(std::mt19937_64& eng) {
    return double(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform_symmetric(std::mt19937_64& eng, double half_width) {
    return half_width * (2.0 * uniform01(eng) - 1.0);
}

// Box-Muller, one variate per call (the sine partner is dropped; draws here
// are far from any hot loop's bottleneck).
inline double gaussian(std::mt19937_64& eng) {
    double u1 = uniform01(eng);
    while (u1 <= 0.0) u1 = uniform01(eng);
    const double u2 = uniform01(eng);
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Two-point variate: ±magnitude with equal probability.
inline double two_point(std::mt19937_64& eng, double magnitude) {
    return (eng() & 1ull) ? magnitude : -magnitude;
}

}  // namespace qtb
