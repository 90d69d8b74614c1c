#pragma once

// Side-chain blocks. A block is posted to the parent chain in its entirety;
// the header commits to the body (txs_root), the resulting state, and the
// per-segment intermediate state roots that fraud proofs dispute.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/smt.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

inline constexpr std::uint8_t kHeaderVersion = 0x01;

struct SideBlockHeader {
    Digest prev_header_hash;
    std::uint64_t height = 0;
    Digest txs_root;
    Digest state_root;
    std::vector<Digest> intermediate_roots;  // one per tx segment, last == state_root
    std::string producer_id;
    std::uint64_t bond = 0;

    bool operator==(const SideBlockHeader&) const = default;
};

struct SideBlock {
    SideBlockHeader header;
    std::vector<Transaction> txs;

    bool operator==(const SideBlock&) const = default;
};

inline Bytes encode_header(const SideBlockHeader& h) {
    ByteWriter w;
    w.u8(kHeaderVersion);
    w.digest(h.prev_header_hash);
    w.u64(h.height);
    w.digest(h.txs_root);
    w.digest(h.state_root);
    w.u32(static_cast<std::uint32_t>(h.intermediate_roots.size()));
    for (const auto& r : h.intermediate_roots) w.digest(r);
    w.str(h.producer_id);
    w.u64(h.bond);
    return std::move(w).take();
}

inline SideBlockHeader decode_header(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    if (r.u8() != kHeaderVersion) throw DecodeError("header version");
    SideBlockHeader h;
    h.prev_header_hash = r.digest();
    h.height = r.u64();
    h.txs_root = r.digest();
    h.state_root = r.digest();
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) h.intermediate_roots.push_back(r.digest());
    h.producer_id = r.str();
    h.bond = r.u64();
    r.expect_end();
    return h;
}

inline Digest header_hash(const SideBlockHeader& h) { return hash_leaf(encode_header(h)); }

inline Bytes encode_block(const SideBlock& b) {
    ByteWriter w;
    w.var_bytes(encode_header(b.header));
    w.u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& tx : b.txs) w.var_bytes(encode_tx_canonical(tx));
    return std::move(w).take();
}

inline SideBlock decode_block(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    SideBlock b;
    b.header = decode_header(r.var_bytes());
    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(decode_tx_canonical(r.var_bytes()));
    r.expect_end();
    return b;
}

// Leaves of the body commitment are the canonical tx encodings, so a tx's
// Merkle leaf hash is exactly its txid.
inline std::vector<Bytes> block_tx_leaves(const SideBlock& b) {
    std::vector<Bytes> leaves;
    leaves.reserve(b.txs.size());
    for (const auto& tx : b.txs) leaves.push_back(encode_tx_canonical(tx));
    return leaves;
}

inline Digest block_txs_root(const SideBlock& b) {
    auto leaves = block_tx_leaves(b);
    return merkle_root(leaves);
}

inline const SideBlockHeader& genesis_header() {
    static const SideBlockHeader g = [] {
        SideBlockHeader h;
        h.prev_header_hash = Digest{};
        h.height = 0;
        h.txs_root = hash_leaf("");
        h.state_root = Smt().root_hash();
        h.producer_id = "genesis";
        h.bond = 0;
        return h;
    }();
    return g;
}

inline const Digest& genesis_header_hash() {
    static const Digest h = header_hash(genesis_header());
    return h;
}

// What the bridge knows about an authorized deposit.
struct DepositInfo {
    std::string recipient;
    std::uint64_t amount = 0;
    bool operator==(const DepositInfo&) const = default;
};

using DepositRegistry = std::map<std::uint64_t, DepositInfo>;

}  // namespace rollsim
