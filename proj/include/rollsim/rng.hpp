#pragma once

// Deterministic randomness for simulations: a SplitMix64 core plus
// hash-derived substreams, so independent subsystems draw from independent
// sequences that all trace back to one scenario seed.

#include <cstdint>
#include <string_view>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"

namespace rollsim {

struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n), rejection-sampled so no residue bias.
    std::uint64_t bounded(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }
};

// Child seed for a named purpose: first 8 bytes (big endian) of
// H(0x07 || seed || label).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    ByteWriter w;
    w.u8(0x07);
    w.u64(seed);
    w.str(label);
    Digest d = sha256(std::move(w).take());
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | d.bytes[static_cast<std::size_t>(i)];
    return x;
}

inline SplitMix64 substream(std::uint64_t seed, std::string_view label) {
    return SplitMix64{derive_seed(seed, label)};
}

// Distinct indices from [0, n), in draw order (partial Fisher-Yates).
inline std::vector<std::uint32_t> sample_without_replacement(SplitMix64& rng, std::uint32_t n,
                                                             std::uint32_t s) {
    if (s > n) s = n;
    std::vector<std::uint32_t> pool(n);
    for (std::uint32_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::uint32_t> out;
    out.reserve(s);
    for (std::uint32_t i = 0; i < s; ++i) {
        std::uint64_t j = i + rng.bounded(n - i);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace rollsim
