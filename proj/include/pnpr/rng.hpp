#pragma once

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
// Every draw is a pure function of (seed, stream, index), so noise synthesis
// and weight initialization are reproducible without carrying RNG state.

#include <cmath>
#include <cstdint>

namespace pnpr {

namespace detail {

inline void philox_round(uint32_t c[4], const uint32_t k[2]) {
    const uint64_t p0 = 0xD2511F53ULL * c[0];
    const uint64_t p1 = 0xCD9E8D57ULL * c[2];
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    const uint32_t n0 = hi1 ^ c[1] ^ k[0];
    const uint32_t n2 = hi0 ^ c[3] ^ k[1];
    c[0] = n0;
    c[1] = lo1;
    c[2] = n2;
    c[3] = lo0;
}

}  // namespace detail

// One 128-bit Philox4x32-10 block keyed by `seed`, counter = (index, stream).
struct PhiloxBlock {
    uint32_t x[4];
};

inline PhiloxBlock philox4x32(uint64_t seed, uint64_t index, uint32_t stream = 0) {
    PhiloxBlock b;
    b.x[0] = static_cast<uint32_t>(index);
    b.x[1] = static_cast<uint32_t>(index >> 32);
    b.x[2] = stream;
    b.x[3] = 0;
    uint32_t key[2] = {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
    for (int r = 0; r < 10; ++r) {
        detail::philox_round(b.x, key);
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
    }
    return b;
}

// Uniform double in [0,1) from lane `lane` of a block.
inline double philox_uniform(uint64_t seed, uint64_t index, uint32_t stream = 0,
                             int lane = 0) {
    const PhiloxBlock b = philox4x32(seed, index, stream);
    return b.x[lane & 3] * 0x1p-32;
}

// Standard normal draw for element `index`: Box-Muller on lanes 0 and 1.
// Lane 0 is shifted into (0,1] so the log never sees zero.
inline double philox_normal(uint64_t seed, uint64_t index, uint32_t stream = 0) {
    const PhiloxBlock b = philox4x32(seed, index, stream);
    const double u1 = (b.x[0] + 1.0) * 0x1p-32;
    const double u2 = b.x[1] * 0x1p-32;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Reserved stream ids, so different consumers of one seed never collide.
enum PhiloxStream : uint32_t {
    kStreamNoise = 0,
    kStreamWeights = 1,
    kStreamTest = 7,
};

}  // namespace pnpr
