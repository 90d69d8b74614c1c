#pragma once

// Sparse Merkle tree over the full 2^256 key space.
//
// The commitment is the root of a depth-256 binary tree where empty leaf
// slots hash to 32 zero bytes, occupied slots to H(0x02 || key || value_hash),
// and interior nodes to H(0x01 || l || r). Empty subtree hashes are shared
// per depth, so proofs carry only the non-default siblings (bitmap + list).
//
// The in-memory representation is a persistent radix trie: a subtree holding
// a single key collapses to a stub, one holding none is absent. Structure is
// a function of the key set alone, so insertion order can never change the
// root, and copies are O(1) (shared_ptr sharing) which the ledger leans on
// for per-block snapshots.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"

namespace rollsim {

struct SmtProof {
    Digest key;
    std::optional<Digest> value_hash;         // nullopt: proves the slot empty
    std::array<std::uint8_t, 32> bitmap{};    // bit d set: sibling at depth d is non-default
    std::vector<Digest> siblings;             // non-default only, increasing depth

    bool operator==(const SmtProof&) const = default;
};

namespace detail {
inline bool bitmap_bit(const std::array<std::uint8_t, 32>& bm, unsigned d) {
    return (bm[d >> 3] >> (7 - (d & 7))) & 1;
}
inline void bitmap_set(std::array<std::uint8_t, 32>& bm, unsigned d) {
    bm[d >> 3] |= static_cast<std::uint8_t>(1u << (7 - (d & 7)));
}
}  // namespace detail

class Smt {
public:
    static constexpr unsigned kDepth = 256;

    // defaults()[d]: hash at depth d of an all-empty subtree. defaults()[256]
    // is the empty leaf slot (32 zero bytes).
    static const std::array<Digest, kDepth + 1>& defaults() {
        static const std::array<Digest, kDepth + 1> table = [] {
            std::array<Digest, kDepth + 1> t{};
            for (int d = kDepth - 1; d >= 0; --d) t[d] = hash_node(t[d + 1], t[d + 1]);
            return t;
        }();
        return table;
    }

    Smt() = default;

    Digest root_hash() const { return root_ ? root_->hash : defaults()[0]; }
    std::uint64_t size() const { return size_; }

    std::optional<Digest> get(const Digest& key) const {
        const Node* n = root_.get();
        unsigned depth = 0;
        while (n) {
            if (n->stub) return n->key == key ? std::optional(n->value_hash) : std::nullopt;
            n = key_bit(key, depth) ? n->right.get() : n->left.get();
            ++depth;
        }
        return std::nullopt;
    }

    Smt with(const Digest& key, const Digest& value_hash) const {
        Smt out = *this;
        bool added = false;
        out.root_ = insert(root_, 0, key, value_hash, added);
        out.size_ = size_ + (added ? 1 : 0);
        return out;
    }

    Smt without(const Digest& key) const {
        Smt out = *this;
        bool removed = false;
        out.root_ = erase(root_, 0, key, removed);
        out.size_ = size_ - (removed ? 1 : 0);
        return out;
    }

    SmtProof prove(const Digest& key) const {
        SmtProof p;
        p.key = key;
        std::vector<Digest> sibs(kDepth);  // sibling hash at each depth, leaf side last
        for (unsigned d = 0; d < kDepth; ++d) sibs[d] = defaults()[d + 1];

        const Node* n = root_.get();
        unsigned depth = 0;
        while (n) {
            if (n->stub) {
                if (n->key == key) {
                    p.value_hash = n->value_hash;
                } else {
                    // The lone resident shares our prefix until some bit d;
                    // there it forms our only non-default sibling.
                    unsigned d = depth;
                    while (key_bit(key, d) == key_bit(n->key, d)) ++d;
                    sibs[d] = stub_fold(n->key, n->value_hash, d + 1);
                }
                break;
            }
            const Node* next = key_bit(key, depth) ? n->right.get() : n->left.get();
            const Node* other = key_bit(key, depth) ? n->left.get() : n->right.get();
            if (other) sibs[depth] = other->hash;
            n = next;
            ++depth;
        }

        for (unsigned d = 0; d < kDepth; ++d) {
            if (sibs[d] != defaults()[d + 1]) {
                detail::bitmap_set(p.bitmap, d);
                p.siblings.push_back(sibs[d]);
            }
        }
        return p;
    }

    static bool verify(const Digest& root, const SmtProof& proof) {
        std::size_t expect = 0;
        for (unsigned d = 0; d < kDepth; ++d)
            if (detail::bitmap_bit(proof.bitmap, d)) ++expect;
        if (proof.siblings.size() != expect) return false;
        return root_from_proof(proof) == root;
    }

    // Root implied by a (structurally valid) proof.
    static Digest root_from_proof(const SmtProof& proof) {
        Digest h = proof.value_hash ? smt_leaf_hash(proof.key, *proof.value_hash)
                                    : defaults()[kDepth];
        std::size_t cursor = proof.siblings.size();
        for (int d = kDepth - 1; d >= 0; --d) {
            Digest sib = defaults()[d + 1];
            if (detail::bitmap_bit(proof.bitmap, static_cast<unsigned>(d))) {
                if (cursor == 0) return Digest{};  // malformed; caller compares against root
                sib = proof.siblings[--cursor];
            }
            h = key_bit(proof.key, static_cast<unsigned>(d)) ? hash_node(sib, h) : hash_node(h, sib);
        }
        return h;
    }

private:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Node {
        bool stub;
        unsigned depth;        // depth of this subtree's root
        Digest hash;           // subtree hash at `depth`
        Digest key, value_hash;  // stub payload
        NodePtr left, right;     // branch children (either may be null)
    };

    NodePtr root_;
    std::uint64_t size_ = 0;

    // Hash of a single-occupant subtree rooted at `depth`.
    static Digest stub_fold(const Digest& key, const Digest& value_hash, unsigned depth) {
        Digest h = smt_leaf_hash(key, value_hash);
        for (int d = kDepth - 1; d >= static_cast<int>(depth); --d) {
            const Digest& def = defaults()[d + 1];
            h = key_bit(key, static_cast<unsigned>(d)) ? hash_node(def, h) : hash_node(h, def);
        }
        return h;
    }

    static NodePtr make_stub(const Digest& key, const Digest& value_hash, unsigned depth) {
        auto n = std::make_shared<Node>();
        n->stub = true;
        n->depth = depth;
        n->key = key;
        n->value_hash = value_hash;
        n->hash = stub_fold(key, value_hash, depth);
        return n;
    }

    static Digest child_hash(const NodePtr& c, unsigned depth) {
        return c ? c->hash : defaults()[depth];
    }

    static NodePtr make_branch(NodePtr left, NodePtr right, unsigned depth) {
        auto n = std::make_shared<Node>();
        n->stub = false;
        n->depth = depth;
        n->hash = hash_node(child_hash(left, depth + 1), child_hash(right, depth + 1));
        n->left = std::move(left);
        n->right = std::move(right);
        return n;
    }

    static NodePtr insert(const NodePtr& node, unsigned depth, const Digest& key,
                          const Digest& value_hash, bool& added) {
        if (!node) {
            added = true;
            return make_stub(key, value_hash, depth);
        }
        if (node->stub) {
            if (node->key == key) return make_stub(key, value_hash, depth);
            added = true;
            unsigned d = depth;
            while (key_bit(key, d) == key_bit(node->key, d)) ++d;
            NodePtr nk = make_stub(key, value_hash, d + 1);
            NodePtr old = make_stub(node->key, node->value_hash, d + 1);
            NodePtr sub = key_bit(key, d) ? make_branch(std::move(old), std::move(nk), d)
                                          : make_branch(std::move(nk), std::move(old), d);
            // Wrap single-child branches back up to this depth.
            for (int i = static_cast<int>(d) - 1; i >= static_cast<int>(depth); --i)
                sub = key_bit(key, static_cast<unsigned>(i))
                          ? make_branch(nullptr, std::move(sub), static_cast<unsigned>(i))
                          : make_branch(std::move(sub), nullptr, static_cast<unsigned>(i));
            return sub;
        }
        if (key_bit(key, depth))
            return make_branch(node->left, insert(node->right, depth + 1, key, value_hash, added), depth);
        return make_branch(insert(node->left, depth + 1, key, value_hash, added), node->right, depth);
    }

    static NodePtr erase(const NodePtr& node, unsigned depth, const Digest& key, bool& removed) {
        if (!node) return nullptr;
        if (node->stub) {
            if (node->key != key) return node;
            removed = true;
            return nullptr;
        }
        NodePtr left = node->left, right = node->right;
        if (key_bit(key, depth))
            right = erase(node->right, depth + 1, key, removed);
        else
            left = erase(node->left, depth + 1, key, removed);
        if (!removed) return node;
        if (!left && !right) return nullptr;
        if (!left && right->stub) return make_stub(right->key, right->value_hash, depth);
        if (!right && left->stub) return make_stub(left->key, left->value_hash, depth);
        return make_branch(std::move(left), std::move(right), depth);
    }
};

inline Bytes encode_smt_proof(const SmtProof& p) {
    ByteWriter w;
    w.digest(p.key);
    w.u8(p.value_hash ? 1 : 0);
    if (p.value_hash) w.digest(*p.value_hash);
    w.raw(p.bitmap);
    for (const auto& s : p.siblings) w.digest(s);
    return std::move(w).take();
}

inline SmtProof decode_smt_proof(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    SmtProof p;
    p.key = r.digest();
    switch (r.u8()) {
        case 0: break;
        case 1: p.value_hash = r.digest(); break;
        default: throw DecodeError("smt proof flag");
    }
    auto bm = r.raw(32);
    std::copy(bm.begin(), bm.end(), p.bitmap.begin());
    std::size_t count = 0;
    for (unsigned d = 0; d < Smt::kDepth; ++d)
        if (detail::bitmap_bit(p.bitmap, d)) ++count;
    for (std::size_t i = 0; i < count; ++i) p.siblings.push_back(r.digest());
    r.expect_end();
    return p;
}

// The slice of a sparse tree a stateless verifier can reconstruct from
// witnesses. Node hashes are keyed by (depth, prefix); ingesting a proof
// records every node it implies, including the asserted-default siblings,
// and any disagreement between witnesses is detected as a conflict.
//
// After ingestion the verifier can read, write and delete exactly the
// witnessed keys; updates refold the affected path, so the running root
// tracks what the full tree would commit to after the same operations.
class PartialSmt {
public:
    static std::optional<PartialSmt> from_witnesses(const Digest& root,
                                                    std::span<const SmtProof> proofs) {
        PartialSmt p;
        p.nodes_[PathId{0, Digest{}}] = root;
        for (const auto& proof : proofs)
            if (!p.ingest(root, proof)) return std::nullopt;
        return p;
    }

    bool knows(const Digest& key) const { return leaves_.contains(key); }

    // nullopt = slot empty; throws nothing, caller must check knows() first.
    std::optional<Digest> value_hash(const Digest& key) const {
        auto it = leaves_.find(key);
        return it == leaves_.end() ? std::nullopt : it->second;
    }

    // Returns false when the key's path was never witnessed.
    bool update(const Digest& key, std::optional<Digest> new_value) {
        if (!leaves_.contains(key)) return false;
        Digest h = new_value ? smt_leaf_hash(key, *new_value) : Smt::defaults()[Smt::kDepth];
        nodes_[PathId{Smt::kDepth, key}] = h;
        for (int d = Smt::kDepth - 1; d >= 0; --d) {
            auto sib = nodes_.find(sibling_id(key, static_cast<unsigned>(d)));
            if (sib == nodes_.end()) return false;  // cannot happen for ingested keys
            h = key_bit(key, static_cast<unsigned>(d)) ? hash_node(sib->second, h)
                                                       : hash_node(h, sib->second);
            nodes_[PathId{static_cast<unsigned>(d), mask(key, static_cast<unsigned>(d))}] = h;
        }
        leaves_[key] = new_value;
        return true;
    }

    Digest root() const { return nodes_.at(PathId{0, Digest{}}); }

private:
    struct PathId {
        unsigned depth;
        Digest prefix;
        auto operator<=>(const PathId&) const = default;
    };

    static Digest mask(const Digest& key, unsigned depth) {
        Digest out{};
        unsigned whole = depth >> 3;
        std::copy(key.bytes.begin(), key.bytes.begin() + whole, out.bytes.begin());
        if (depth & 7)
            out.bytes[whole] = static_cast<std::uint8_t>(key.bytes[whole] & (0xff << (8 - (depth & 7))));
        return out;
    }

    static PathId sibling_id(const Digest& key, unsigned d) {
        Digest pre = mask(key, d + 1);
        pre.bytes[d >> 3] ^= static_cast<std::uint8_t>(1u << (7 - (d & 7)));
        return PathId{d + 1, pre};
    }

    bool put(PathId id, const Digest& h) {
        auto [it, inserted] = nodes_.emplace(id, h);
        return inserted || it->second == h;
    }

    bool ingest(const Digest& root, const SmtProof& proof) {
        if (Smt::root_from_proof(proof) != root) return false;
        std::size_t expect = 0;
        for (unsigned d = 0; d < Smt::kDepth; ++d)
            if (detail::bitmap_bit(proof.bitmap, d)) ++expect;
        if (proof.siblings.size() != expect) return false;

        Digest h = proof.value_hash ? smt_leaf_hash(proof.key, *proof.value_hash)
                                    : Smt::defaults()[Smt::kDepth];
        if (!put(PathId{Smt::kDepth, proof.key}, h)) return false;
        std::size_t cursor = proof.siblings.size();
        for (int d = Smt::kDepth - 1; d >= 0; --d) {
            Digest sib = Smt::defaults()[d + 1];
            if (detail::bitmap_bit(proof.bitmap, static_cast<unsigned>(d)))
                sib = proof.siblings[--cursor];
            if (!put(sibling_id(proof.key, static_cast<unsigned>(d)), sib)) return false;
            h = key_bit(proof.key, static_cast<unsigned>(d)) ? hash_node(sib, h)
                                                             : hash_node(h, sib);
            if (!put(PathId{static_cast<unsigned>(d), mask(proof.key, static_cast<unsigned>(d))}, h))
                return false;
        }
        auto leaf = leaves_.find(proof.key);
        if (leaf != leaves_.end() && leaf->second != proof.value_hash) return false;
        leaves_[proof.key] = proof.value_hash;
        return true;
    }

    std::map<PathId, Digest> nodes_;
    std::map<Digest, std::optional<Digest>> leaves_;
};

}  // namespace rollsim
