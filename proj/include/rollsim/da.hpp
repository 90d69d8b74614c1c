#pragma once

// Availability sampling over erasure-coded block payloads. The payload is
// split into k data chunks, extended to n with a systematic Reed-Solomon
// code over GF(2^16) (chunk j carries the evaluations at point j), and
// committed as a Merkle root over all n chunks. Any k chunks reconstruct
// the payload; samplers draw a few indices and a withholder is caught as
// soon as one draw hits a hidden chunk. If the producer publishes chunks
// that are not a codeword at all, any k+1 of them form a succinct
// incorrect-coding proof against the root.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/rng.hpp"

namespace rollsim {

namespace gf16 {

// GF(2^16) with the primitive polynomial x^16 + x^12 + x^3 + x + 1 (0x1100B).
struct Tables {
    std::array<std::uint16_t, 131070> exp;  // doubled so products never wrap
    std::array<std::uint16_t, 65536> log;
};

inline const Tables& tables() {
    static const Tables t = [] {
        Tables tt{};
        std::uint32_t x = 1;
        for (std::uint32_t i = 0; i < 65535; ++i) {
            tt.exp[i] = static_cast<std::uint16_t>(x);
            tt.log[x] = static_cast<std::uint16_t>(i);
            x <<= 1;
            if (x & 0x10000) x ^= 0x1100B;
        }
        for (std::uint32_t i = 65535; i < 131070; ++i) tt.exp[i] = tt.exp[i - 65535];
        tt.log[0] = 0;  // never consulted: callers special-case zero
        return tt;
    }();
    return t;
}

inline std::uint16_t add(std::uint16_t a, std::uint16_t b) { return a ^ b; }

inline std::uint16_t mul(std::uint16_t a, std::uint16_t b) {
    if (a == 0 || b == 0) return 0;
    const Tables& t = tables();
    return t.exp[t.log[a] + t.log[b]];
}

inline std::uint16_t inv(std::uint16_t a) {
    const Tables& t = tables();
    return t.exp[65535 - t.log[a]];
}

inline std::uint16_t div(std::uint16_t a, std::uint16_t b) { return mul(a, inv(b)); }

}  // namespace gf16

namespace detail {

// Lagrange basis evaluated at `target` for interpolation points `xs`.
inline std::vector<std::uint16_t> lagrange_at(const std::vector<std::uint16_t>& xs,
                                              std::uint16_t target) {
    const std::size_t k = xs.size();
    std::vector<std::uint16_t> basis(k);
    for (std::size_t u = 0; u < k; ++u) {
        std::uint16_t num = 1, den = 1;
        for (std::size_t w = 0; w < k; ++w) {
            if (w == u) continue;
            num = gf16::mul(num, gf16::add(target, xs[w]));
            den = gf16::mul(den, gf16::add(xs[u], xs[w]));
        }
        basis[u] = gf16::div(num, den);
    }
    return basis;
}

inline std::uint16_t sym_at(const Bytes& chunk, std::size_t s) {
    return static_cast<std::uint16_t>((chunk[2 * s] << 8) | chunk[2 * s + 1]);
}

inline void sym_put(Bytes& chunk, std::size_t s, std::uint16_t v) {
    chunk[2 * s] = static_cast<std::uint8_t>(v >> 8);
    chunk[2 * s + 1] = static_cast<std::uint8_t>(v & 0xFF);
}

}  // namespace detail

struct DaEncoding {
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    std::vector<Bytes> chunks;  // n equal-sized chunks, first k systematic
    Digest root;                // Merkle root over the chunk bytes
};

inline Digest da_root(const std::vector<Bytes>& chunks) { return merkle_root(chunks); }

// Frame and split `payload` into k chunks, extend to n. Chunk sizes are
// even (whole symbols); the frame prefixes the length so padding strips.
inline DaEncoding da_encode(const Bytes& payload, std::uint32_t n, std::uint32_t k) {
    if (k == 0 || n < k || n > 65535) throw std::invalid_argument("bad coding parameters");
    DaEncoding enc;
    enc.n = n;
    enc.k = k;

    Bytes framed;
    {
        ByteWriter w;
        w.u64(payload.size());
        w.raw(payload);
        framed = std::move(w).take();
    }
    std::size_t chunk_bytes = (framed.size() + k - 1) / k;
    chunk_bytes += chunk_bytes % 2;  // whole symbols
    if (chunk_bytes == 0) chunk_bytes = 2;
    framed.resize(chunk_bytes * k, 0);

    enc.chunks.resize(n);
    for (std::uint32_t j = 0; j < k; ++j)
        enc.chunks[j].assign(framed.begin() + static_cast<std::ptrdiff_t>(j * chunk_bytes),
                             framed.begin() + static_cast<std::ptrdiff_t>((j + 1) * chunk_bytes));

    const std::size_t syms = chunk_bytes / 2;
    std::vector<std::uint16_t> xs(k);
    for (std::uint32_t i = 0; i < k; ++i) xs[i] = static_cast<std::uint16_t>(i);
    for (std::uint32_t j = k; j < n; ++j) {
        auto basis = detail::lagrange_at(xs, static_cast<std::uint16_t>(j));
        Bytes& out = enc.chunks[j];
        out.resize(chunk_bytes);
        for (std::size_t s = 0; s < syms; ++s) {
            std::uint16_t acc = 0;
            for (std::uint32_t i = 0; i < k; ++i)
                acc = gf16::add(acc, gf16::mul(basis[i], detail::sym_at(enc.chunks[i], s)));
            detail::sym_put(out, s, acc);
        }
    }
    enc.root = da_root(enc.chunks);
    return enc;
}

// Reconstruct the payload from any k chunks (index -> bytes). Returns
// nullopt when fewer than k distinct chunks are supplied, sizes disagree,
// or the recovered frame is inconsistent.
inline std::optional<Bytes> da_decode(std::uint32_t n, std::uint32_t k,
                                      const std::map<std::uint32_t, Bytes>& have) {
    if (k == 0 || n < k || have.size() < k) return std::nullopt;

    std::vector<std::uint16_t> xs;
    std::vector<const Bytes*> vs;
    for (const auto& [idx, bytes] : have) {
        if (idx >= n) return std::nullopt;
        if (!vs.empty() && bytes.size() != vs.front()->size()) return std::nullopt;
        xs.push_back(static_cast<std::uint16_t>(idx));
        vs.push_back(&bytes);
        if (xs.size() == k) break;
    }
    const std::size_t chunk_bytes = vs.front()->size();
    if (chunk_bytes == 0 || chunk_bytes % 2 != 0) return std::nullopt;
    const std::size_t syms = chunk_bytes / 2;

    Bytes framed(chunk_bytes * k);
    for (std::uint32_t j = 0; j < k; ++j) {
        auto basis = detail::lagrange_at(xs, static_cast<std::uint16_t>(j));
        for (std::size_t s = 0; s < syms; ++s) {
            std::uint16_t acc = 0;
            for (std::size_t u = 0; u < xs.size(); ++u)
                acc = gf16::add(acc, gf16::mul(basis[u], detail::sym_at(*vs[u], s)));
            detail::sym_put(framed, j * syms + s, acc);
        }
    }

    try {
        ByteReader r(framed);
        std::uint64_t len = r.u64();
        if (len > framed.size() - 8) return std::nullopt;
        Bytes payload(framed.begin() + 8, framed.begin() + 8 + static_cast<std::ptrdiff_t>(len));
        return payload;
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

// ---- sampling ----

// Per-session draw: s distinct chunk indices.
inline std::vector<std::uint32_t> da_sample(SplitMix64& rng, std::uint32_t n, std::uint32_t s) {
    return sample_without_replacement(rng, n, s);
}

inline bool da_sample_hits(const std::vector<std::uint32_t>& sample,
                           const std::set<std::uint32_t>& hidden) {
    for (std::uint32_t i : sample)
        if (hidden.contains(i)) return true;
    return false;
}

// Exact detection probability for one session of s draws without
// replacement against w hidden chunks: 1 - C(n-w, s) / C(n, s), evaluated
// from exact integer products.
inline double da_detection_probability(std::uint64_t n, std::uint64_t w, std::uint64_t s) {
    if (n == 0 || w == 0 || s == 0) return 0.0;
    if (s > n) s = n;
    if (n - w < s) return 1.0;  // every s-subset hits
    unsigned __int128 num = 1, den = 1;
    auto gcd128 = [](unsigned __int128 a, unsigned __int128 b) {
        while (b != 0) {
            unsigned __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    };
    for (std::uint64_t i = 0; i < s; ++i) {
        num *= (n - w - i);
        den *= (n - i);
        unsigned __int128 g = gcd128(num, den);
        num /= g;
        den /= g;
    }
    return 1.0 - static_cast<double>(static_cast<long double>(num) /
                                     static_cast<long double>(den));
}

// ---- incorrect-coding proofs ----

struct DaChunkWitness {
    std::uint32_t index = 0;
    Bytes chunk;
    MerkleProof inclusion;  // against the published root, tree size n
};

// k+1 committed chunks that cannot lie on one degree-<k polynomial: decode
// from the first k, the last one disagrees with the implied codeword.
struct IncorrectCodingProof {
    Digest root;
    std::uint32_t n = 0;
    std::uint32_t k = 0;
    std::vector<DaChunkWitness> witnesses;
};

inline bool verify_incorrect_coding(const IncorrectCodingProof& p) {
    if (p.k == 0 || p.n < p.k || p.n > 65535) return false;
    if (p.witnesses.size() != static_cast<std::size_t>(p.k) + 1) return false;

    std::set<std::uint32_t> seen;
    const std::size_t chunk_bytes = p.witnesses.front().chunk.size();
    if (chunk_bytes == 0 || chunk_bytes % 2 != 0) return false;
    for (const DaChunkWitness& w : p.witnesses) {
        if (w.index >= p.n || !seen.insert(w.index).second) return false;
        if (w.chunk.size() != chunk_bytes) return false;
        if (w.inclusion.tree_size != p.n || w.inclusion.leaf_index != w.index) return false;
        if (!merkle_verify_hashed(p.root, hash_leaf(w.chunk), w.inclusion)) return false;
    }

    std::vector<std::uint16_t> xs(p.k);
    std::vector<const Bytes*> vs(p.k);
    for (std::uint32_t u = 0; u < p.k; ++u) {
        xs[u] = static_cast<std::uint16_t>(p.witnesses[u].index);
        vs[u] = &p.witnesses[u].chunk;
    }
    const DaChunkWitness& extra = p.witnesses.back();
    auto basis = detail::lagrange_at(xs, static_cast<std::uint16_t>(extra.index));
    for (std::size_t s = 0; s < chunk_bytes / 2; ++s) {
        std::uint16_t acc = 0;
        for (std::uint32_t u = 0; u < p.k; ++u)
            acc = gf16::add(acc, gf16::mul(basis[u], detail::sym_at(*vs[u], s)));
        if (acc != detail::sym_at(extra.chunk, s)) return true;  // provably not a codeword
    }
    return false;  // consistent: nothing proven
}

// Scan a published chunk set for an inconsistency and package it. Returns
// nullopt when the chunks really are one codeword.
inline std::optional<IncorrectCodingProof> generate_incorrect_coding_proof(
    const std::vector<Bytes>& chunks, std::uint32_t k) {
    const std::uint32_t n = static_cast<std::uint32_t>(chunks.size());
    if (k == 0 || n <= k) return std::nullopt;
    Digest root = da_root(chunks);
    auto witness = [&](std::uint32_t idx) {
        return DaChunkWitness{idx, chunks[idx], merkle_prove(chunks, idx)};
    };
    IncorrectCodingProof proof;
    proof.root = root;
    proof.n = n;
    proof.k = k;
    for (std::uint32_t u = 0; u < k; ++u) proof.witnesses.push_back(witness(u));
    proof.witnesses.push_back(DaChunkWitness{});
    for (std::uint32_t e = k; e < n; ++e) {
        proof.witnesses.back() = witness(e);
        if (verify_incorrect_coding(proof)) return proof;
    }
    // parity agrees with the data chunks: check data against a re-decode
    // from parity (covers corrupted data chunks when n-k >= k)
    if (n - k >= k) {
        IncorrectCodingProof alt;
        alt.root = root;
        alt.n = n;
        alt.k = k;
        for (std::uint32_t u = 0; u < k; ++u) alt.witnesses.push_back(witness(k + u));
        alt.witnesses.push_back(DaChunkWitness{});
        for (std::uint32_t e = 0; e < k; ++e) {
            alt.witnesses.back() = witness(e);
            if (verify_incorrect_coding(alt)) return alt;
        }
    }
    return std::nullopt;
}

}  // namespace rollsim
