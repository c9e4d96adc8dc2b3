#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace apsim {

// Deterministic draw helpers. The standard <random> distributions are
// implementation-defined, so all stochastic code in this project draws
// through these to keep trajectories reproducible across toolchains.

inline double uniform01(std::mt19937_64& rng) {
    // 53 random mantissa bits -> [0, 1)
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Marsaglia polar method, one value per call (the spare is discarded so the
// stream position depends only on the number of calls made).
inline double normal01(std::mt19937_64& rng) {
    for (;;) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        const double v = 2.0 * uniform01(rng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return rng() % n;
}

// splitmix64 mix, used to derive per-episode / per-scenario seeds from one
// master seed without correlated streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace apsim
