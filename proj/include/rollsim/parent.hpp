#pragma once

// Simulated parent chain. Abstract block production with per-miner local
// views: longest-chain fork choice with first-seen tie-break, reorgs that
// return orphaned calls to the mempool, a censoring-miner policy, and the
// per-fork bridge fold (memoized; pure replay is the oracle).

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rollsim/bridge.hpp"
#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"

namespace rollsim {

inline constexpr std::uint8_t kParentBlockVersion = 0x01;

struct ParentBlock {
    Digest hash;  // commits to every other field
    Digest prev;
    std::uint64_t height = 0;
    std::string producer;
    std::vector<BridgeCall> calls;  // parent-chain transaction order

    bool operator==(const ParentBlock&) const = default;
};

inline Bytes encode_parent_block_body(const ParentBlock& b) {
    ByteWriter w;
    w.u8(kParentBlockVersion);
    w.digest(b.prev);
    w.u64(b.height);
    w.str(b.producer);
    w.u64(b.calls.size());
    for (const auto& c : b.calls) w.var_bytes(encode_call(c));
    return std::move(w).take();
}

inline Digest parent_block_hash(const ParentBlock& b) {
    return hash_leaf(encode_parent_block_body(b));
}

inline ParentBlock decode_parent_block_body(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    if (r.u8() != kParentBlockVersion) throw DecodeError("parent block version");
    ParentBlock b;
    b.prev = r.digest();
    b.height = r.u64();
    b.producer = r.str();
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) b.calls.push_back(decode_call(r.var_bytes()));
    r.expect_end();
    b.hash = parent_block_hash(b);
    return b;
}

inline ParentBlock make_parent_block(const Digest& prev, std::uint64_t height,
                                     std::string producer, std::vector<BridgeCall> calls) {
    ParentBlock b;
    b.prev = prev;
    b.height = height;
    b.producer = std::move(producer);
    b.calls = std::move(calls);
    b.hash = parent_block_hash(b);
    return b;
}

inline const ParentBlock& genesis_parent_block() {
    static const ParentBlock g = make_parent_block(Digest{}, 0, "genesis", {});
    return g;
}

// Calls from these senders are kept out of blocks mined while the window is
// open; they stay pooled and land once it closes.
struct CensorPolicy {
    std::set<std::string> senders;
    std::uint64_t from_height = 0;
    std::uint64_t duration = 0;  // heights [from, from + duration) censored

    bool censors(const std::string& sender, std::uint64_t height) const {
        return height >= from_height && height - from_height < duration &&
               senders.contains(sender);
    }
};

struct ForkView {
    std::string owner;
    BridgeParams params;
    CensorPolicy policy;

    std::map<Digest, ParentBlock> blocks;
    Digest tip;
    std::uint64_t tip_height = 0;
    std::vector<BridgeCall> mempool;
    std::map<Digest, std::vector<ParentBlock>> awaiting;  // keyed by missing parent
    std::map<Digest, BridgeState> fold_cache;             // snapshots keyed by block hash

    explicit ForkView(std::string owner_ = {}, BridgeParams p = {})
        : owner(std::move(owner_)), params(std::move(p)) {
        const ParentBlock& g = genesis_parent_block();
        blocks.emplace(g.hash, g);
        tip = g.hash;
    }

    const ParentBlock* find(const Digest& h) const {
        auto it = blocks.find(h);
        return it == blocks.end() ? nullptr : &it->second;
    }

    bool in_mempool(const Digest& id) const {
        for (const auto& c : mempool)
            if (call_id(c) == id) return true;
        return false;
    }
};

// New calls queue in arrival order; duplicates (by call id) are ignored.
inline void submit_call(ForkView& view, const BridgeCall& call) {
    if (view.in_mempool(call_id(call))) return;
    view.mempool.push_back(call);
}

namespace detail {

inline const ParentBlock& common_ancestor(const ForkView& view, const Digest& a,
                                          const Digest& b) {
    const ParentBlock* x = view.find(a);
    const ParentBlock* y = view.find(b);
    if (x == nullptr || y == nullptr) throw std::logic_error("common_ancestor: unknown block");
    while (x->height > y->height) x = view.find(x->prev);
    while (y->height > x->height) y = view.find(y->prev);
    while (x->hash != y->hash) {
        x = view.find(x->prev);
        y = view.find(y->prev);
        if (x == nullptr || y == nullptr) throw std::logic_error("common_ancestor: broken chain");
    }
    return *x;
}

// Switch tip; calls committed only on the abandoned branch go back to the pool.
inline void adopt_tip(ForkView& view, const Digest& new_tip) {
    const ParentBlock& fork = common_ancestor(view, view.tip, new_tip);

    std::set<Digest> kept;  // call ids included on the adopted branch
    for (const ParentBlock* b = view.find(new_tip); b->hash != fork.hash;
         b = view.find(b->prev))
        for (const auto& c : b->calls) kept.insert(call_id(c));

    std::vector<BridgeCall> returned;  // old-branch calls in chain order
    std::vector<const ParentBlock*> old_branch;
    for (const ParentBlock* b = view.find(view.tip); b->hash != fork.hash;
         b = view.find(b->prev))
        old_branch.push_back(b);
    for (auto it = old_branch.rbegin(); it != old_branch.rend(); ++it)
        for (const auto& c : (*it)->calls) {
            Digest id = call_id(c);
            if (!kept.contains(id) && !view.in_mempool(id)) returned.push_back(c);
        }
    view.mempool.insert(view.mempool.begin(), returned.begin(), returned.end());
    // calls committed on the adopted branch leave the pool; calls seen only
    // on losing forks stay pooled so they still reach the canonical chain
    std::erase_if(view.mempool, [&](const BridgeCall& c) { return kept.contains(call_id(c)); });

    view.tip = new_tip;
    view.tip_height = view.find(new_tip)->height;
}

inline void insert_block(ForkView& view, const ParentBlock& block) {
    view.blocks.emplace(block.hash, block);
    // a strictly longer chain wins; first-seen keeps ties. Canonical-branch
    // mempool pruning happens inside adopt_tip.
    if (block.height > view.tip_height) adopt_tip(view, block.hash);
}

}  // namespace detail

// Idempotent; blocks whose parent is unknown wait until the gap fills.
inline void deliver(ForkView& view, const ParentBlock& block) {
    if (view.blocks.contains(block.hash)) return;
    if (parent_block_hash(block) != block.hash) return;  // corrupt, drop
    const ParentBlock* parent = view.find(block.prev);
    if (parent == nullptr) {
        for (const auto& queued : view.awaiting[block.prev])
            if (queued.hash == block.hash) return;
        view.awaiting[block.prev].push_back(block);
        return;
    }
    if (block.height != parent->height + 1) return;  // malformed, drop

    detail::insert_block(view, block);
    // flush anything that was waiting on this block, recursively
    std::vector<Digest> ready = {block.hash};
    while (!ready.empty()) {
        Digest h = ready.back();
        ready.pop_back();
        auto it = view.awaiting.find(h);
        if (it == view.awaiting.end()) continue;
        std::vector<ParentBlock> children = std::move(it->second);
        view.awaiting.erase(it);
        for (const auto& child : children) {
            if (view.blocks.contains(child.hash)) continue;
            if (child.height != view.find(h)->height + 1) continue;
            detail::insert_block(view, child);
            ready.push_back(child.hash);
        }
    }
}

// Assemble and adopt the next block on this view's tip, honoring the
// censorship window. Censored calls stay pooled for later heights.
inline ParentBlock mine(ForkView& view) {
    ParentBlock b;
    b.prev = view.tip;
    b.height = view.tip_height + 1;
    b.producer = view.owner;
    for (const auto& c : view.mempool)
        if (!view.policy.censors(c.sender, b.height)) b.calls.push_back(c);
    b.hash = parent_block_hash(b);
    deliver(view, b);
    return b;
}

// The bridge state at `at` is the pure fold of exec_call over its ancestry.
// Snapshots accelerate repeated queries; replay without them must agree.
inline BridgeState bridge_state_of(ForkView& view, const Digest& at, bool use_cache = true) {
    std::vector<const ParentBlock*> path;
    BridgeState st(view.params);
    Digest cur = at;
    while (true) {
        if (use_cache) {
            auto hit = view.fold_cache.find(cur);
            if (hit != view.fold_cache.end()) {
                st = hit->second;
                break;
            }
        }
        const ParentBlock* b = view.find(cur);
        if (b == nullptr) throw std::logic_error("bridge_state_of: unknown block");
        if (b->height == 0) break;
        path.push_back(b);
        cur = b->prev;
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        const ParentBlock* b = *it;
        for (const auto& c : b->calls) exec_call(st, c, b->height, b->prev);
        if (use_cache && b->height % 16 == 0) view.fold_cache.emplace(b->hash, st);
    }
    if (use_cache) view.fold_cache.emplace(at, st);
    return st;
}

}  // namespace rollsim
