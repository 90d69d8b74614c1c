#pragma once

// 32-byte digests and the single hashing seam used everywhere else.
// All tree/commitment hashing is SHA-256 with one-byte domain separation
// prefixes so leaves, interior nodes and the various key spaces can never
// collide with each other.

#include <array>
#include <cstdint>
#include <cstring>
#include <compare>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

namespace rollsim {

struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    auto operator<=>(const Digest&) const = default;

    const std::uint8_t* data() const { return bytes.data(); }
    std::uint8_t* data() { return bytes.data(); }
    static constexpr std::size_t size() { return 32; }

    bool is_zero() const {
        for (auto b : bytes)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const {
        static constexpr char kDigits[] = "0123456789abcdef";
        std::string out(64, '0');
        for (std::size_t i = 0; i < 32; ++i) {
            out[2 * i] = kDigits[bytes[i] >> 4];
            out[2 * i + 1] = kDigits[bytes[i] & 0xf];
        }
        return out;
    }

    static Digest from_hex(std::string_view hex) {
        if (hex.size() != 64) throw std::invalid_argument("digest hex must be 64 chars");
        auto nibble = [](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            if (c >= 'A' && c <= 'F') return c - 'A' + 10;
            throw std::invalid_argument("bad hex digit");
        };
        Digest d;
        for (std::size_t i = 0; i < 32; ++i)
            d.bytes[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
        return d;
    }
};

// Domain separation tags. Keep in one place; never reuse a value.
namespace tag {
inline constexpr std::uint8_t kMerkleLeaf   = 0x00;
inline constexpr std::uint8_t kMerkleNode   = 0x01;
inline constexpr std::uint8_t kSmtLeaf      = 0x02;
inline constexpr std::uint8_t kMac          = 0x03;
inline constexpr std::uint8_t kKeyGen       = 0x04;
inline constexpr std::uint8_t kUtxoKey      = 0x05;
inline constexpr std::uint8_t kDepositKey   = 0x06;
inline constexpr std::uint8_t kRngStream    = 0x07;
}  // namespace tag

namespace detail {

// One-shot SHA-256. OpenSSL 3 makes per-call algorithm fetches expensive, so
// fetch the MD once and keep a thread-local context; the sparse tree hammers
// this function (hundreds of calls per state update).
inline void sha256_backend(const std::uint8_t* data, std::size_t len, std::uint8_t out[32]) {
    static EVP_MD* md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    thread_local EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (EVP_DigestInit_ex(ctx, md, nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data, len) != 1 ||
        EVP_DigestFinal_ex(ctx, out, nullptr) != 1)
        throw std::runtime_error("sha256 backend failure");
}

}  // namespace detail

inline Digest sha256(std::span<const std::uint8_t> data) {
    Digest d;
    detail::sha256_backend(data.data(), data.size(), d.data());
    return d;
}

inline Digest sha256(std::string_view s) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

// sha256(tag || parts...) without intermediate allocation for the hot shapes.
inline Digest tagged_hash(std::uint8_t tag, std::span<const std::uint8_t> a,
                          std::span<const std::uint8_t> b = {}) {
    std::array<std::uint8_t, 1 + 64> buf;  // covers the two-digest case inline
    if (1 + a.size() + b.size() <= buf.size()) {
        buf[0] = tag;
        std::memcpy(buf.data() + 1, a.data(), a.size());
        if (!b.empty()) std::memcpy(buf.data() + 1 + a.size(), b.data(), b.size());
        Digest d;
        detail::sha256_backend(buf.data(), 1 + a.size() + b.size(), d.data());
        return d;
    }
    std::vector<std::uint8_t> big;
    big.reserve(1 + a.size() + b.size());
    big.push_back(tag);
    big.insert(big.end(), a.begin(), a.end());
    big.insert(big.end(), b.begin(), b.end());
    return sha256(big);
}

inline Digest hash_leaf(std::span<const std::uint8_t> payload) {
    return tagged_hash(tag::kMerkleLeaf, payload);
}

inline Digest hash_leaf(std::string_view payload) {
    return hash_leaf(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
}

inline Digest hash_node(const Digest& left, const Digest& right) {
    return tagged_hash(tag::kMerkleNode, left.bytes, right.bytes);
}

inline Digest smt_leaf_hash(const Digest& key, const Digest& value_hash) {
    return tagged_hash(tag::kSmtLeaf, key.bytes, value_hash.bytes);
}

// bit i of a key, MSB-first across the 32 bytes (bit 0 = top bit of byte 0).
inline int key_bit(const Digest& key, unsigned depth) {
    return (key.bytes[depth >> 3] >> (7 - (depth & 7))) & 1;
}

}  // namespace rollsim
