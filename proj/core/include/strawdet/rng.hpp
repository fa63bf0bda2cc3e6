#pragma once

#include <cmath>
#include <cstdint>

namespace strawdet {

// SplitMix64 (Vigna's reference constants). Every stochastic piece of the
// project draws from this generator so that a seed fixes the whole run
// bit-for-bit on any platform.
struct Rng {
    uint64_t state = 0;

    explicit Rng(uint64_t seed = 0) : state(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1), 53-bit mantissa.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo,hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // i in [0,n), n > 0. Modulo bias is irrelevant at our n << 2^64.
    uint64_t below(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; consumes two draws, returns one.
    double gauss() {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

// Order-independent seed derivation for per-file / per-op streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    Rng r(seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1)));
    return r.next_u64();
}

// FNV-1a, used to salt per-file seeds by name.
inline uint64_t hash64(const char* data, size_t len) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace strawdet
