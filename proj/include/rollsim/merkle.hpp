#pragma once

// Binary Merkle tree over ordered byte-string leaves.
//
// Shape rule: split a range of n leaves at k = largest power of two < n;
// an unpaired leaf is promoted to its parent unchanged (no duplication).
// Leaves hash as H(0x00 || payload), interior nodes as H(0x01 || l || r).
// The empty tree commits to hash_leaf("").

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"

namespace rollsim {

struct MerkleProof {
    std::uint64_t tree_size = 0;
    std::uint64_t leaf_index = 0;
    std::vector<Digest> siblings;  // leaf-to-root order

    bool operator==(const MerkleProof&) const = default;
};

namespace detail {

// Largest power of two strictly less than n (n >= 2).
inline std::uint64_t merkle_split(std::uint64_t n) {
    return std::bit_floor(n - 1);
}

inline Digest merkle_range_root(std::span<const Digest> hashes) {
    if (hashes.size() == 1) return hashes[0];
    std::uint64_t k = merkle_split(hashes.size());
    return hash_node(merkle_range_root(hashes.first(k)),
                     merkle_range_root(hashes.subspan(k)));
}

}  // namespace detail

inline Digest merkle_root_hashed(std::span<const Digest> leaf_hashes) {
    if (leaf_hashes.empty()) return hash_leaf("");
    return detail::merkle_range_root(leaf_hashes);
}

inline Digest merkle_root(std::span<const Bytes> leaves) {
    std::vector<Digest> hashes;
    hashes.reserve(leaves.size());
    for (const auto& l : leaves) hashes.push_back(hash_leaf(l));
    return merkle_root_hashed(hashes);
}

inline MerkleProof merkle_prove_hashed(std::span<const Digest> leaf_hashes, std::uint64_t index) {
    if (index >= leaf_hashes.size()) throw std::out_of_range("merkle_prove: index out of range");
    MerkleProof proof;
    proof.tree_size = leaf_hashes.size();
    proof.leaf_index = index;
    // Descend recording the off-path subtree root at each split, then flip
    // to leaf-to-root order.
    std::span<const Digest> range = leaf_hashes;
    std::uint64_t idx = index;
    std::vector<Digest> top_down;
    while (range.size() > 1) {
        std::uint64_t k = detail::merkle_split(range.size());
        if (idx < k) {
            top_down.push_back(detail::merkle_range_root(range.subspan(k)));
            range = range.first(k);
        } else {
            top_down.push_back(detail::merkle_range_root(range.first(k)));
            range = range.subspan(k);
            idx -= k;
        }
    }
    proof.siblings.assign(top_down.rbegin(), top_down.rend());
    return proof;
}

inline MerkleProof merkle_prove(std::span<const Bytes> leaves, std::uint64_t index) {
    std::vector<Digest> hashes;
    hashes.reserve(leaves.size());
    for (const auto& l : leaves) hashes.push_back(hash_leaf(l));
    return merkle_prove_hashed(hashes, index);
}

// Verify from the leaf hash; callers with raw payloads use merkle_verify.
inline bool merkle_verify_hashed(const Digest& root, const Digest& leaf_hash,
                                 const MerkleProof& proof) {
    if (proof.tree_size == 0 || proof.leaf_index >= proof.tree_size) return false;
    // Re-derive the descent so the sibling count is forced by (index, size);
    // a proof with the wrong number of siblings can never verify.
    std::uint64_t n = proof.tree_size;
    std::uint64_t idx = proof.leaf_index;
    std::vector<bool> went_left;
    while (n > 1) {
        std::uint64_t k = detail::merkle_split(n);
        if (idx < k) {
            went_left.push_back(true);
            n = k;
        } else {
            went_left.push_back(false);
            idx -= k;
            n -= k;
        }
    }
    if (proof.siblings.size() != went_left.size()) return false;
    Digest h = leaf_hash;
    for (std::size_t i = 0; i < went_left.size(); ++i) {
        bool left = went_left[went_left.size() - 1 - i];
        h = left ? hash_node(h, proof.siblings[i]) : hash_node(proof.siblings[i], h);
    }
    return h == root;
}

inline bool merkle_verify(const Digest& root, std::span<const std::uint8_t> leaf,
                          const MerkleProof& proof) {
    return merkle_verify_hashed(root, hash_leaf(leaf), proof);
}

// Wire form: tree_size u64 || leaf_index u64 || siblings back to back.
inline Bytes encode_merkle_proof(const MerkleProof& p) {
    ByteWriter w;
    w.u64(p.tree_size);
    w.u64(p.leaf_index);
    for (const auto& s : p.siblings) w.digest(s);
    return std::move(w).take();
}

inline MerkleProof decode_merkle_proof(std::span<const std::uint8_t> data) {
    if (data.size() < 16 || (data.size() - 16) % 32 != 0)
        throw DecodeError("merkle proof length");
    ByteReader r(data);
    MerkleProof p;
    p.tree_size = r.u64();
    p.leaf_index = r.u64();
    std::size_t n = (data.size() - 16) / 32;
    p.siblings.reserve(n);
    for (std::size_t i = 0; i < n; ++i) p.siblings.push_back(r.digest());
    r.expect_end();
    return p;
}

}  // namespace rollsim
