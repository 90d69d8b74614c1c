#pragma once

// Parent-chain bridge contract as a pure state machine. Folds an ordered
// stream of calls: optimistic header acceptance with tip extension and bond
// escrow, fraud adjudication with rollback and half-bond rewards, delayed
// finalization, deposits, burn-backed withdrawals, and the halt schedule.
// Value-semantic so each parent-chain fork folds its own copy.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/fraud.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

inline constexpr std::uint8_t kCallVersion = 0x01;
inline constexpr std::uint8_t kBridgeStateVersion = 0x01;

enum class LeaderMode : std::uint8_t { Fcfs = 0, StakedShuffle = 1 };

struct BridgeParams {
    std::uint64_t bond = 100;               // required stake per submission
    std::uint64_t finalization_delay = 10;  // parent blocks a header must survive
    std::uint64_t segment_size = 4;         // txs per replay segment
    std::uint64_t challenge_window = 50;    // parent blocks of challenge-only mode after halt
    std::uint64_t halt_height = 0;          // first forbidden side height; 0 = never halt
    std::uint64_t root_window = 16;         // recent-root ring length for tx bundles
    LeaderMode leader_mode = LeaderMode::Fcfs;
    std::vector<std::string> stakers;       // kept sorted; used by StakedShuffle only

    bool operator==(const BridgeParams&) const = default;
};

enum class HeaderStatus : std::uint8_t { Pending = 0, Finalized = 1, Orphaned = 2 };

inline std::string_view to_string(HeaderStatus s) {
    switch (s) {
        case HeaderStatus::Pending: return "pending";
        case HeaderStatus::Finalized: return "finalized";
        case HeaderStatus::Orphaned: return "orphaned";
    }
    return "?";
}

struct HeaderRecord {
    CommittedHeader committed;
    std::uint64_t submitted_at = 0;  // parent height at acceptance
    std::string producer;
    std::uint64_t bond = 0;
    HeaderStatus status = HeaderStatus::Pending;

    bool operator==(const HeaderRecord&) const = default;
};

// ---- calls ----

enum class CallKind : std::uint8_t {
    SubmitBlock = 0,
    Deposit = 1,
    SubmitFraudProof = 2,
    Finalize = 3,
    Withdraw = 4,
};

struct BridgeCall {
    std::string sender;
    std::uint64_t nonce = 0;  // disambiguates otherwise-identical calls
    CallKind kind = CallKind::SubmitBlock;
    Bytes payload;

    bool operator==(const BridgeCall&) const = default;
};

inline Bytes encode_call(const BridgeCall& c) {
    ByteWriter w;
    w.u8(kCallVersion);
    w.str(c.sender);
    w.u64(c.nonce);
    w.u8(static_cast<std::uint8_t>(c.kind));
    w.var_bytes(c.payload);
    return std::move(w).take();
}

inline BridgeCall decode_call(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    if (r.u8() != kCallVersion) throw DecodeError("call version");
    BridgeCall c;
    c.sender = r.str();
    c.nonce = r.u64();
    std::uint8_t k = r.u8();
    if (k > static_cast<std::uint8_t>(CallKind::Withdraw)) throw DecodeError("call kind");
    c.kind = static_cast<CallKind>(k);
    c.payload = r.var_bytes();
    r.expect_end();
    return c;
}

inline Digest call_id(const BridgeCall& c) { return hash_leaf(encode_call(c)); }

// Deposit ids come from the call hash (stable across parent forks), not a counter.
inline std::uint64_t deposit_id_of(const BridgeCall& c) {
    Digest d = call_id(c);
    std::uint64_t id = 0;
    for (int i = 0; i < 8; ++i) id = (id << 8) | d.bytes[static_cast<std::size_t>(i)];
    return id;
}

inline BridgeCall make_submit_block(std::string sender, const SideBlock& block,
                                    std::uint64_t bond, std::uint64_t nonce = 0) {
    ByteWriter w;
    w.u64(bond);
    w.var_bytes(encode_block(block));
    return BridgeCall{std::move(sender), nonce, CallKind::SubmitBlock, std::move(w).take()};
}

inline BridgeCall make_deposit(std::string sender, std::string_view recipient,
                               std::uint64_t amount, std::uint64_t nonce = 0) {
    ByteWriter w;
    w.str(recipient);
    w.u64(amount);
    return BridgeCall{std::move(sender), nonce, CallKind::Deposit, std::move(w).take()};
}

inline BridgeCall make_fraud_call(std::string sender, const FraudProof& proof,
                                  std::uint64_t nonce = 0) {
    return BridgeCall{std::move(sender), nonce, CallKind::SubmitFraudProof,
                      encode_fraud_proof(proof)};
}

inline BridgeCall make_finalize(std::string sender, const Digest& header,
                                std::uint64_t nonce = 0) {
    ByteWriter w;
    w.digest(header);
    return BridgeCall{std::move(sender), nonce, CallKind::Finalize, std::move(w).take()};
}

inline BridgeCall make_withdraw(std::string sender, const Digest& header,
                                const Transaction& burn_tx, const MerkleProof& inclusion,
                                std::uint64_t nonce = 0) {
    ByteWriter w;
    w.digest(header);
    w.var_bytes(encode_tx_canonical(burn_tx));
    w.var_bytes(encode_merkle_proof(inclusion));
    return BridgeCall{std::move(sender), nonce, CallKind::Withdraw, std::move(w).take()};
}

// ---- results and events ----

enum class CallError : std::uint8_t {
    None = 0,
    MalformedCall,
    NotExtendingTip,
    WrongBond,
    BodyRootMismatch,
    ChainHalted,
    NotLeader,
    UnknownHeader,
    AlreadyFinalized,
    ProofInvalid,
    TooEarly,
    AncestorNotFinal,
    NotFinalized,
    BadInclusionProof,
    NotRecipient,
    AlreadyPaid,
};

inline std::string_view to_string(CallError e) {
    switch (e) {
        case CallError::None: return "none";
        case CallError::MalformedCall: return "malformed_call";
        case CallError::NotExtendingTip: return "not_extending_tip";
        case CallError::WrongBond: return "wrong_bond";
        case CallError::BodyRootMismatch: return "body_root_mismatch";
        case CallError::ChainHalted: return "chain_halted";
        case CallError::NotLeader: return "not_leader";
        case CallError::UnknownHeader: return "unknown_header";
        case CallError::AlreadyFinalized: return "already_finalized";
        case CallError::ProofInvalid: return "proof_invalid";
        case CallError::TooEarly: return "too_early";
        case CallError::AncestorNotFinal: return "ancestor_not_final";
        case CallError::NotFinalized: return "not_finalized";
        case CallError::BadInclusionProof: return "bad_inclusion_proof";
        case CallError::NotRecipient: return "not_recipient";
        case CallError::AlreadyPaid: return "already_paid";
    }
    return "?";
}

enum class BridgeEventKind : std::uint8_t {
    BlockSubmitted = 0,
    BlockOrphaned = 1,
    BlockFinalized = 2,
    DepositRegistered = 3,
    WithdrawalPaid = 4,
    FraudProven = 5,
};

inline std::string_view to_string(BridgeEventKind k) {
    switch (k) {
        case BridgeEventKind::BlockSubmitted: return "block_submitted";
        case BridgeEventKind::BlockOrphaned: return "block_orphaned";
        case BridgeEventKind::BlockFinalized: return "block_finalized";
        case BridgeEventKind::DepositRegistered: return "deposit_registered";
        case BridgeEventKind::WithdrawalPaid: return "withdrawal_paid";
        case BridgeEventKind::FraudProven: return "fraud_proven";
    }
    return "?";
}

struct BridgeEvent {
    BridgeEventKind kind = BridgeEventKind::BlockSubmitted;
    Digest subject{};          // header hash; burn txid; deposit call id
    std::string actor;         // producer / recipient / prover
    std::uint64_t amount = 0;  // bond, deposit, payout, or reward
    std::uint64_t aux = 0;     // side height, deposit id, burned total, or output index

    bool operator==(const BridgeEvent&) const = default;
};

struct CallResult {
    bool accepted = false;
    CallError error = CallError::None;
    std::string detail;
    std::vector<BridgeEvent> events;
};

enum class ChainPhase : std::uint8_t { Active = 0, ChallengeOnly = 1, Settled = 2 };

inline std::string_view to_string(ChainPhase p) {
    switch (p) {
        case ChainPhase::Active: return "active";
        case ChainPhase::ChallengeOnly: return "challenge_only";
        case ChainPhase::Settled: return "settled";
    }
    return "?";
}

// ---- contract state ----

struct BridgeState {
    BridgeParams params;
    std::map<Digest, HeaderRecord> headers;  // every header ever accepted, incl. orphans
    Digest tip = genesis_header_hash();
    std::uint64_t tip_height = 0;
    DepositRegistry deposits;
    std::set<std::pair<Digest, std::uint32_t>> withdrawals_paid;  // (burn txid, output index)

    std::uint64_t bonds_submitted = 0;
    std::uint64_t bonds_escrowed = 0;
    std::uint64_t bonds_released = 0;
    std::uint64_t rewards_paid = 0;
    std::uint64_t bonds_burned = 0;
    std::uint64_t total_deposited = 0;
    std::uint64_t total_withdrawn = 0;

    explicit BridgeState(BridgeParams p = {}) : params(std::move(p)) {
        std::sort(params.stakers.begin(), params.stakers.end());
        headers.emplace(genesis_header_hash(),
                        HeaderRecord{CommittedHeader{genesis_header(), genesis_header_hash(), 0},
                                     0, "genesis", 0, HeaderStatus::Finalized});
    }

    bool operator==(const BridgeState&) const = default;

    const HeaderRecord* find(const Digest& h) const {
        auto it = headers.find(h);
        return it == headers.end() ? nullptr : &it->second;
    }

    // Parent-side escrow backing the side chain's value.
    std::uint64_t locked_value() const { return total_deposited - total_withdrawn; }

    // View for the fraud verifier: orphaned headers are no longer disputable.
    HeaderLookup committed_lookup() const {
        return [this](const Digest& h) -> const CommittedHeader* {
            auto it = headers.find(h);
            if (it == headers.end() || it->second.status == HeaderStatus::Orphaned)
                return nullptr;
            return &it->second.committed;
        };
    }
};

// Escrowed + released + rewarded + burned must exactly cover what was posted.
inline bool bond_accounting_consistent(const BridgeState& st) {
    return st.bonds_escrowed + st.bonds_released + st.rewards_paid + st.bonds_burned ==
           st.bonds_submitted;
}

// Halt schedule. The clock starts when the currently committed header at the
// last allowed side height was accepted; orphaning that header restarts the
// chain so an honest replacement can still settle properly.
inline ChainPhase halt_phase(const BridgeState& st, std::uint64_t parent_height) {
    if (st.params.halt_height == 0) return ChainPhase::Active;
    const std::uint64_t last = st.params.halt_height - 1;
    if (st.tip_height < last) return ChainPhase::Active;
    const HeaderRecord* rec = st.find(st.tip);
    while (rec != nullptr && rec->committed.header.height > last)
        rec = st.find(rec->committed.header.prev_header_hash);
    if (rec == nullptr) return ChainPhase::Active;
    if (parent_height < rec->submitted_at + st.params.challenge_window)
        return ChainPhase::ChallengeOnly;
    return ChainPhase::Settled;
}

// Deterministic leader for StakedShuffle mode: the parent block being built
// on seeds the draw, so every node computes the same winner per side height.
inline std::optional<std::string> staked_shuffle_leader(std::span<const std::string> stakers,
                                                        const Digest& parent_prev_hash,
                                                        std::uint64_t side_height) {
    if (stakers.empty()) return std::nullopt;
    ByteWriter w;
    w.digest(parent_prev_hash);
    w.u64(side_height);
    Digest d = sha256(std::move(w).take());
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x = (x << 8) | d.bytes[static_cast<std::size_t>(i)];
    return stakers[static_cast<std::size_t>(x % stakers.size())];
}

namespace detail {

inline CallResult reject(CallError e, std::string detail = {}) {
    return CallResult{false, e, std::move(detail), {}};
}

inline CallResult exec_submit_block(BridgeState& st, const BridgeCall& call,
                                    std::uint64_t parent_height, const Digest& parent_prev) {
    std::uint64_t bond = 0;
    SideBlock block;
    try {
        ByteReader r(call.payload);
        bond = r.u64();
        Bytes bb = r.var_bytes();
        r.expect_end();
        block = decode_block(bb);
    } catch (const DecodeError& e) {
        return reject(CallError::MalformedCall, e.what());
    }
    const SideBlockHeader& h = block.header;

    ChainPhase phase = halt_phase(st, parent_height);
    if (phase != ChainPhase::Active)
        return reject(CallError::ChainHalted, std::string(to_string(phase)));
    if (st.params.halt_height != 0 && h.height >= st.params.halt_height)
        return reject(CallError::ChainHalted, "height beyond halt");

    if (h.prev_header_hash != st.tip || h.height != st.tip_height + 1)
        return reject(CallError::NotExtendingTip);
    if (bond != st.params.bond || h.bond != bond) return reject(CallError::WrongBond);
    if (h.producer_id != call.sender)
        return reject(CallError::MalformedCall, "producer mismatch");
    if (st.params.leader_mode == LeaderMode::StakedShuffle) {
        auto leader = staked_shuffle_leader(st.params.stakers, parent_prev, h.height);
        if (!leader.has_value() || *leader != call.sender) return reject(CallError::NotLeader);
    }

    Digest hh = header_hash(h);
    if (st.headers.contains(hh)) return reject(CallError::MalformedCall, "header already known");
    if (block_txs_root(block) != h.txs_root)
        return reject(CallError::BodyRootMismatch, "txs root");
    if (block.txs.empty()) {
        if (!h.intermediate_roots.empty())
            return reject(CallError::BodyRootMismatch, "intermediate count");
        const HeaderRecord* parent = st.find(st.tip);
        if (parent == nullptr || h.state_root != parent->committed.header.state_root)
            return reject(CallError::BodyRootMismatch, "empty block state root");
    } else {
        if (h.intermediate_roots.size() != segment_count(block.txs.size(), st.params.segment_size))
            return reject(CallError::BodyRootMismatch, "intermediate count");
        if (h.intermediate_roots.back() != h.state_root)
            return reject(CallError::BodyRootMismatch, "last intermediate");
    }

    st.headers.emplace(hh, HeaderRecord{CommittedHeader{h, hh, block.txs.size()}, parent_height,
                                        call.sender, bond, HeaderStatus::Pending});
    st.tip = hh;
    st.tip_height = h.height;
    st.bonds_submitted += bond;
    st.bonds_escrowed += bond;
    CallResult res{true, CallError::None, {}, {}};
    res.events.push_back(BridgeEvent{BridgeEventKind::BlockSubmitted, hh, call.sender, bond,
                                     h.height});
    return res;
}

inline CallResult exec_deposit(BridgeState& st, const BridgeCall& call) {
    std::string recipient;
    std::uint64_t amount = 0;
    try {
        ByteReader r(call.payload);
        recipient = r.str();
        amount = r.u64();
        r.expect_end();
    } catch (const DecodeError& e) {
        return reject(CallError::MalformedCall, e.what());
    }
    if (recipient.empty() || amount == 0)
        return reject(CallError::MalformedCall, "empty deposit");
    std::uint64_t id = deposit_id_of(call);
    if (st.deposits.contains(id))
        return reject(CallError::MalformedCall, "deposit id collision");

    st.deposits.emplace(id, DepositInfo{recipient, amount});
    st.total_deposited += amount;
    CallResult res{true, CallError::None, {}, {}};
    res.events.push_back(
        BridgeEvent{BridgeEventKind::DepositRegistered, call_id(call), recipient, amount, id});
    return res;
}

inline CallResult exec_fraud_proof(BridgeState& st, const BridgeCall& call) {
    FraudProof proof;
    try {
        proof = decode_fraud_proof(call.payload);
    } catch (const DecodeError& e) {
        return reject(CallError::MalformedCall, e.what());
    }
    Digest accused = std::visit([](const auto& p) { return p.accused_header_hash; }, proof);
    auto it = st.headers.find(accused);
    if (it == st.headers.end() || it->second.status == HeaderStatus::Orphaned)
        return reject(CallError::UnknownHeader);
    if (it->second.status == HeaderStatus::Finalized) return reject(CallError::AlreadyFinalized);

    FraudVerdict verdict =
        verify_fraud_proof(st.committed_lookup(), st.deposits, st.params.segment_size, proof);
    if (!verdict.is_fraud()) return reject(CallError::ProofInvalid, verdict.detail);

    // Orphan the faulted header and everything above it; tip returns to its parent.
    std::vector<Digest> path;  // tip down to accused
    Digest cur = st.tip;
    const Digest stop = it->second.committed.header.prev_header_hash;
    while (cur != stop) {
        path.push_back(cur);
        cur = st.headers.at(cur).committed.header.prev_header_hash;
    }
    std::uint64_t pot = 0;
    CallResult res{true, CallError::None, verdict.detail, {}};
    std::vector<BridgeEvent> orphan_events;
    for (auto rit = path.rbegin(); rit != path.rend(); ++rit) {
        HeaderRecord& rec = st.headers.at(*rit);
        rec.status = HeaderStatus::Orphaned;
        pot += rec.bond;
        orphan_events.push_back(BridgeEvent{BridgeEventKind::BlockOrphaned, *rit, rec.producer,
                                            rec.bond, rec.committed.header.height});
    }
    std::uint64_t reward = pot / 2;
    std::uint64_t burned = pot - reward;
    st.bonds_escrowed -= pot;
    st.rewards_paid += reward;
    st.bonds_burned += burned;
    st.tip = stop;
    st.tip_height = it->second.committed.header.height - 1;
    res.events.push_back(
        BridgeEvent{BridgeEventKind::FraudProven, accused, call.sender, reward, burned});
    for (auto& ev : orphan_events) res.events.push_back(std::move(ev));
    return res;
}

inline CallResult exec_finalize(BridgeState& st, const BridgeCall& call,
                                std::uint64_t parent_height) {
    Digest hh;
    try {
        ByteReader r(call.payload);
        hh = r.digest();
        r.expect_end();
    } catch (const DecodeError& e) {
        return reject(CallError::MalformedCall, e.what());
    }
    auto it = st.headers.find(hh);
    if (it == st.headers.end() || it->second.status == HeaderStatus::Orphaned)
        return reject(CallError::UnknownHeader);
    HeaderRecord& rec = it->second;
    if (rec.status == HeaderStatus::Finalized) return reject(CallError::AlreadyFinalized);

    const HeaderRecord* parent = st.find(rec.committed.header.prev_header_hash);
    if (parent == nullptr || parent->status != HeaderStatus::Finalized)
        return reject(CallError::AncestorNotFinal);
    if (parent_height < rec.submitted_at + st.params.finalization_delay)
        return reject(CallError::TooEarly);
    if (st.params.halt_height != 0 &&
        rec.committed.header.height + 1 >= st.params.halt_height &&
        parent_height < rec.submitted_at + st.params.challenge_window)
        return reject(CallError::TooEarly, "halt challenge window");

    rec.status = HeaderStatus::Finalized;
    st.bonds_escrowed -= rec.bond;
    st.bonds_released += rec.bond;
    CallResult res{true, CallError::None, {}, {}};
    res.events.push_back(BridgeEvent{BridgeEventKind::BlockFinalized, hh, rec.producer, rec.bond,
                                     rec.committed.header.height});
    return res;
}

inline CallResult exec_withdraw(BridgeState& st, const BridgeCall& call) {
    Digest hh;
    Bytes txb;
    MerkleProof inclusion;
    try {
        ByteReader r(call.payload);
        hh = r.digest();
        txb = r.var_bytes();
        Bytes pb = r.var_bytes();
        r.expect_end();
        inclusion = decode_merkle_proof(pb);
    } catch (const DecodeError& e) {
        return reject(CallError::MalformedCall, e.what());
    }
    auto it = st.headers.find(hh);
    if (it == st.headers.end()) return reject(CallError::UnknownHeader);
    const HeaderRecord& rec = it->second;
    if (rec.status != HeaderStatus::Finalized) return reject(CallError::NotFinalized);

    Transaction tx;
    try {
        tx = decode_tx_canonical(txb);
    } catch (const DecodeError&) {
        return reject(CallError::MalformedCall, "undecodable burn tx");
    }
    if (tx.kind != Transaction::Kind::Burn)
        return reject(CallError::MalformedCall, "not a burn tx");
    std::uint32_t burn_index = 0;
    std::size_t burns = 0;
    for (std::uint32_t i = 0; i < tx.outputs.size(); ++i) {
        if (!is_burn_predicate(tx.outputs[i].predicate)) continue;
        burn_index = i;
        ++burns;
        if (tx.outputs[i].value != tx.amount ||
            tx.outputs[i].predicate.parent_recipient != tx.parent_recipient)
            return reject(CallError::MalformedCall, "burn form");
    }
    if (burns != 1) return reject(CallError::MalformedCall, "burn form");

    if (inclusion.tree_size != rec.committed.tx_count ||
        !merkle_verify_hashed(rec.committed.header.txs_root, hash_leaf(txb), inclusion))
        return reject(CallError::BadInclusionProof);
    if (call.sender != tx.parent_recipient) return reject(CallError::NotRecipient);

    Digest txid = hash_leaf(txb);
    auto key = std::make_pair(txid, burn_index);
    if (st.withdrawals_paid.contains(key)) return reject(CallError::AlreadyPaid);

    st.withdrawals_paid.insert(key);
    st.total_withdrawn += tx.amount;
    CallResult res{true, CallError::None, {}, {}};
    res.events.push_back(
        BridgeEvent{BridgeEventKind::WithdrawalPaid, txid, call.sender, tx.amount, burn_index});
    return res;
}

}  // namespace detail

// Single entry point: dispatch one parent-ordered call. Rejected calls leave
// the state untouched. parent_prev seeds the StakedShuffle draw.
inline CallResult exec_call(BridgeState& st, const BridgeCall& call, std::uint64_t parent_height,
                            const Digest& parent_prev = Digest{}) {
    switch (call.kind) {
        case CallKind::SubmitBlock:
            return detail::exec_submit_block(st, call, parent_height, parent_prev);
        case CallKind::Deposit: return detail::exec_deposit(st, call);
        case CallKind::SubmitFraudProof: return detail::exec_fraud_proof(st, call);
        case CallKind::Finalize: return detail::exec_finalize(st, call, parent_height);
        case CallKind::Withdraw: return detail::exec_withdraw(st, call);
    }
    return detail::reject(CallError::MalformedCall, "unknown call kind");
}

// Canonical serialization; bitwise equality of folds is the convergence check.
inline Bytes encode_bridge_state(const BridgeState& st) {
    ByteWriter w;
    w.u8(kBridgeStateVersion);
    w.u64(st.params.bond);
    w.u64(st.params.finalization_delay);
    w.u64(st.params.segment_size);
    w.u64(st.params.challenge_window);
    w.u64(st.params.halt_height);
    w.u64(st.params.root_window);
    w.u8(static_cast<std::uint8_t>(st.params.leader_mode));
    w.u64(st.params.stakers.size());
    for (const auto& s : st.params.stakers) w.str(s);

    w.u64(st.headers.size());
    for (const auto& [hash, rec] : st.headers) {
        w.digest(hash);
        w.var_bytes(encode_header(rec.committed.header));
        w.u64(rec.committed.tx_count);
        w.u64(rec.submitted_at);
        w.str(rec.producer);
        w.u64(rec.bond);
        w.u8(static_cast<std::uint8_t>(rec.status));
    }
    w.digest(st.tip);
    w.u64(st.tip_height);

    w.u64(st.deposits.size());
    for (const auto& [id, info] : st.deposits) {
        w.u64(id);
        w.str(info.recipient);
        w.u64(info.amount);
    }
    w.u64(st.withdrawals_paid.size());
    for (const auto& [txid, index] : st.withdrawals_paid) {
        w.digest(txid);
        w.u32(index);
    }
    w.u64(st.bonds_submitted);
    w.u64(st.bonds_escrowed);
    w.u64(st.bonds_released);
    w.u64(st.rewards_paid);
    w.u64(st.bonds_burned);
    w.u64(st.total_deposited);
    w.u64(st.total_withdrawn);
    return std::move(w).take();
}

}  // namespace rollsim
