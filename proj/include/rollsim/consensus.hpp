#pragma once

// The actors that drive the side chain over the bridge: full-node state
// shared by everyone attached to one parent-chain replica, block producers
// (honest, fault-injecting, withholding), and fraud watchers. Everything a
// node concludes follows from data committed on its parent chain — blocks
// ride in calldata, so watching is folding submissions in order.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/bridge.hpp"
#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/faults.hpp"
#include "rollsim/fraud.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/parent.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

inline std::optional<SideBlock> decode_submit_payload(const Bytes& payload) {
    try {
        ByteReader r(payload);
        (void)r.u64();  // bond
        Bytes bb = r.var_bytes();
        r.expect_end();
        return decode_block(bb);
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

// ---- chain tracker ----

// A node's rolling evaluation of the committed side chain. It maintains the
// longest valid prefix of the current spine plus the ledger state at its
// end; the first block past that prefix (if any) is the one a watcher can
// prove fraudulent, and its parent state is exactly `prefix_state`.
//
// Invalid verdicts can flip to valid as deposits register (claim checks run
// against the current registry, matching how proofs are adjudicated), so the
// frontier is re-evaluated whenever the registry has grown.
struct ChainTracker {
    std::uint64_t k = 4;

    std::map<Digest, SideBlock> bodies;  // every submission seen in calldata
    std::vector<Digest> spine;           // committed chain, genesis first
    std::size_t valid_len = 1;           // spine prefix known valid (genesis counts)
    LedgerState prefix_state = LedgerState::genesis();
    ChainIndex index;                    // tx/spend locations over the valid prefix
    std::set<Digest> committed_signs;    // sign hashes of txs in the valid prefix

    bool frontier_invalid = false;  // spine[valid_len] evaluated invalid
    Digest frontier_hash{};
    std::size_t frontier_registry = 0;  // registry size at that evaluation

    void observe_body(const SideBlock& block) { bodies.emplace(header_hash(block.header), block); }

    bool tip_is_valid() const { return valid_len == spine.size(); }

    std::optional<Digest> first_invalid() const {
        if (frontier_invalid && valid_len < spine.size() && spine[valid_len] == frontier_hash)
            return frontier_hash;
        return std::nullopt;
    }

    void sync(const BridgeState& bridge) {
        std::vector<Digest> ns;
        for (Digest h = bridge.tip;; h = bridge.find(h)->committed.header.prev_header_hash) {
            ns.push_back(h);
            if (h == genesis_header_hash()) break;
        }
        std::reverse(ns.begin(), ns.end());

        std::size_t common = 0;
        while (common < ns.size() && common < spine.size() && ns[common] == spine[common])
            ++common;
        if (common < valid_len) {
            // our validated prefix was reorganized away: start over
            valid_len = 1;
            prefix_state = LedgerState::genesis();
            index = ChainIndex{};
            committed_signs.clear();
            frontier_invalid = false;
        }
        spine = std::move(ns);
        if (frontier_invalid && (valid_len >= spine.size() || spine[valid_len] != frontier_hash))
            frontier_invalid = false;

        while (valid_len < spine.size()) {
            const Digest& h = spine[valid_len];
            auto it = bodies.find(h);
            if (it == bodies.end()) break;  // body not seen yet
            if (frontier_invalid && frontier_hash == h &&
                frontier_registry == bridge.deposits.size())
                break;  // still invalid; nothing that could change the verdict changed
            ApplyResult res = apply_block(prefix_state, it->second, bridge.deposits, k);
            if (!res.ok()) {
                frontier_invalid = true;
                frontier_hash = h;
                frontier_registry = bridge.deposits.size();
                break;
            }
            prefix_state = std::move(res.state);
            index.index_block(it->second, h);
            for (const Transaction& tx : it->second.txs)
                committed_signs.insert(tx_sign_hash(tx));
            ++valid_len;
            frontier_invalid = false;
        }
    }
};

// ---- full node ----

// One parent-chain replica plus everything derived from it. Producers,
// watchers and users attach to a node; several actors can share one.
struct PendingSideTx {
    Transaction tx;
    Digest sign;  // sign hash; claims are producer-attached so this is the stable identity
};

struct NodeState {
    ForkView view;
    ChainTracker tracker;
    BridgeState bridge;
    std::set<Digest> harvested;  // parent blocks already scanned for bodies

    std::vector<PendingSideTx> side_pool;  // user txs awaiting inclusion, arrival order
    std::set<Digest> side_seen;

    NodeState(std::string owner, const BridgeParams& params)
        : view(std::move(owner), params), bridge(params) {
        tracker.k = params.segment_size;
    }

    void accept_side_tx(const Transaction& tx) {
        Digest sign = tx_sign_hash(tx);
        if (!side_seen.insert(sign).second) return;
        side_pool.push_back(PendingSideTx{tx, sign});
    }

    // Pooled txs not yet committed on the canonical chain, capped so block
    // assembly never copies an unbounded backlog.
    std::vector<Transaction> pending_candidates(std::size_t cap) const {
        std::vector<Transaction> out;
        for (const PendingSideTx& e : side_pool) {
            if (out.size() >= cap) break;
            if (tracker.committed_signs.contains(e.sign)) continue;
            out.push_back(e.tx);
        }
        return out;
    }

    void refresh() {
        for (const ParentBlock* b = view.find(view.tip);
             b != nullptr && !harvested.contains(b->hash); b = view.find(b->prev)) {
            harvested.insert(b->hash);
            for (const BridgeCall& c : b->calls)
                if (c.kind == CallKind::SubmitBlock)
                    if (auto blk = decode_submit_payload(c.payload)) tracker.observe_body(*blk);
        }
        bridge = bridge_state_of(view, view.tip);
        tracker.sync(bridge);
    }
};

// ---- producers ----

enum class ProducerKind : std::uint8_t { Honest, FaultInjector, Withholding };

struct ProducerConfig {
    std::string id;
    ProducerKind kind = ProducerKind::Honest;
    std::uint64_t max_txs = 1024;
    bool produce_empty = false;  // advance height even with no traffic

    // FaultInjector: stage `fault` in the first block at or after
    // `fault_height`, then pile `burst - 1` empty children on the rogue tip
    // while it lasts. After the chain rolls back, the attacker retires.
    FaultKind fault = FaultKind::None;
    std::uint64_t fault_height = 0;
    std::uint32_t burst = 1;
};

namespace detail {

// A committed transfer whose inputs are gone now — re-including it is the
// classic replayed-tx double spend.
inline std::optional<Transaction> find_respendable(const ChainTracker& t) {
    for (const Digest& h : t.spine) {
        auto it = t.bodies.find(h);
        if (it == t.bodies.end()) continue;
        for (const Transaction& tx : it->second.txs)
            if (tx.kind == Transaction::Kind::Transfer && !tx.inputs.empty()) return tx;
    }
    return std::nullopt;
}

}  // namespace detail

struct ProducerNode {
    ProducerConfig cfg;
    std::uint64_t nonce = 1;

    Digest inflight_submit{};  // call id of the submission currently pooled
    bool has_inflight = false;
    std::map<Digest, Digest> finalize_inflight;  // header -> call id

    bool injected = false;
    std::uint32_t burst_left = 0;
    Digest rogue_tip{};
    Digest rogue_state_root{};

    // One simulation step against this producer's node view. Returns the
    // calls to broadcast: possibly a finalization for an own ripe header and
    // possibly the next block submission.
    std::vector<BridgeCall> step(NodeState& node) {
        std::vector<BridgeCall> out;
        if (auto f = next_finalize(node)) out.push_back(std::move(*f));
        if (auto s = next_submission(node)) out.push_back(std::move(*s));
        return out;
    }

  private:
    std::optional<BridgeCall> next_finalize(NodeState& node) {
        const BridgeState& st = node.bridge;
        const std::uint64_t now = node.view.tip_height + 1;  // height the call lands at
        for (const Digest& h : node.tracker.spine) {
            if (h == genesis_header_hash()) continue;
            const HeaderRecord* rec = st.find(h);
            if (rec->status == HeaderStatus::Finalized) continue;
            // earliest non-final header on the spine: ours to file or blocked
            if (rec->status != HeaderStatus::Pending || rec->producer != cfg.id)
                return std::nullopt;
            if (now < rec->submitted_at + st.params.finalization_delay) return std::nullopt;
            if (st.params.halt_height != 0 &&
                rec->committed.header.height + 1 >= st.params.halt_height &&
                now < rec->submitted_at + st.params.challenge_window)
                return std::nullopt;
            auto it = finalize_inflight.find(h);
            if (it != finalize_inflight.end() && node.view.in_mempool(it->second))
                return std::nullopt;  // already on its way
            BridgeCall call = make_finalize(cfg.id, h, nonce++);
            finalize_inflight[h] = call_id(call);
            return call;
        }
        return std::nullopt;
    }

    std::optional<BridgeCall> next_submission(NodeState& node) {
        if (cfg.kind == ProducerKind::Withholding) return std::nullopt;
        if (has_inflight && node.view.in_mempool(inflight_submit)) return std::nullopt;
        has_inflight = false;

        const BridgeState& st = node.bridge;
        const std::uint64_t next_h = st.tip_height + 1;
        const std::uint64_t now = node.view.tip_height + 1;
        if (halt_phase(st, now) != ChainPhase::Active) return std::nullopt;
        if (st.params.halt_height != 0 && next_h >= st.params.halt_height) return std::nullopt;
        if (st.params.leader_mode == LeaderMode::StakedShuffle) {
            auto leader = staked_shuffle_leader(st.params.stakers, node.view.tip, next_h);
            if (!leader.has_value() || *leader != cfg.id) return std::nullopt;
        }

        if (cfg.kind == ProducerKind::FaultInjector && injected) {
            if (burst_left == 0 || st.tip != rogue_tip) return std::nullopt;  // retired
            SideBlock child;
            child.header.prev_header_hash = rogue_tip;
            child.header.height = next_h;
            child.header.txs_root = hash_leaf("");
            child.header.state_root = rogue_state_root;
            child.header.producer_id = cfg.id;
            child.header.bond = st.params.bond;
            --burst_left;
            rogue_tip = header_hash(child.header);  // keep extending our own branch
            return file_submission(child);
        }

        if (!node.tracker.tip_is_valid()) return std::nullopt;  // refuse to build on bad state

        std::vector<Transaction> candidates = node.pending_candidates(cfg.max_txs * 2);
        SideBlock block = build_block(candidates, node.tracker.prefix_state, st.deposits, cfg.id,
                                      st.params.bond, node.tracker.k, st.tip, cfg.max_txs);

        if (cfg.kind == ProducerKind::FaultInjector && next_h >= cfg.fault_height) {
            FaultContext ctx;
            ctx.beneficiary = cfg.id;
            ctx.respendable = detail::find_respendable(node.tracker);
            ctx.nonce = nonce;
            if (auto bad = inject_fault(cfg.fault, block, node.tracker.prefix_state,
                                        node.tracker.k, ctx)) {
                injected = true;
                burst_left = cfg.burst - 1;
                rogue_tip = header_hash(bad->header);
                rogue_state_root = bad->header.state_root;
                return file_submission(*bad);
            }
            // nothing to corrupt yet: stay honest and retry next height
        }

        if (block.txs.empty() && !cfg.produce_empty) return std::nullopt;
        return file_submission(block);
    }

    std::optional<BridgeCall> file_submission(const SideBlock& block) {
        BridgeCall call = make_submit_block(cfg.id, block, block.header.bond, nonce++);
        inflight_submit = call_id(call);
        has_inflight = true;
        return call;
    }
};

// ---- watchers ----

// Challenges the earliest invalid pending header its node can see, with the
// cheaper refutation when one applies and a segment replay otherwise.
// `delay` models verification lag: a verdict must stand that many rounds
// before the proof is filed.
struct WatcherNode {
    std::string id;
    std::uint64_t delay = 0;
    std::uint64_t nonce = 1;
    std::set<Digest> filed;  // accused headers already challenged (or given up on)
    std::map<Digest, std::uint64_t> first_seen;

    std::optional<BridgeCall> step(NodeState& node, std::uint64_t round = 0) {
        auto bad = node.tracker.first_invalid();
        if (!bad.has_value() || filed.contains(*bad)) return std::nullopt;
        auto [seen, fresh] = first_seen.try_emplace(*bad, round);
        if (round < seen->second + delay) return std::nullopt;
        const HeaderRecord* rec = node.bridge.find(*bad);
        if (rec == nullptr) return std::nullopt;
        if (rec->status != HeaderStatus::Pending) {
            filed.insert(*bad);  // finalized out from under us: unchallengeable
            return std::nullopt;
        }
        const SideBlock& block = node.tracker.bodies.at(*bad);
        const ChainTracker& t = node.tracker;
        FraudProof proof;
        if (auto b = generate_proof_b(t.index, t.bodies, t.prefix_state, block,
                                      node.bridge.deposits, t.k))
            proof = std::move(*b);
        else if (auto a = generate_proof_a(t.prefix_state, block, node.bridge.deposits, t.k))
            proof = std::move(*a);
        else
            return std::nullopt;
        filed.insert(*bad);
        return make_fraud_call(id, proof, nonce++);
    }
};

}  // namespace rollsim
