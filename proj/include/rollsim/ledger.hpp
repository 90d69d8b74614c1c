#pragma once

// UTXO ledger: state, transaction validation, block application and block
// building. This is the execution layer both producers and watchers replay;
// the bridge never runs it (it only stores commitments), which is the whole
// point of the optimistic design.
//
// Validation rules beyond the obvious:
//  - an output cannot be spent in the block that created it (the committed
//    creation height makes this checkable from witnesses alone);
//  - claims (producer-attested copies of spent outputs) must match the
//    ledger record byte for byte;
//  - value is checked before predicates, structure before both. Error
//    precedence is part of the contract: fraud-proof generation keys off it.
//
// Validation is written against a minimal state view (find_utxo +
// deposit_claimed) so the exact same rules run over a full LedgerState and
// over the partial, witness-reconstructed state a fraud-proof verifier has.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/smt.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

enum class TxError : std::uint8_t {
    BadStructure,
    DoubleSpendWithinTx,
    MissingOutpoint,
    ImmatureOutpoint,
    ClaimMismatch,
    ValueImbalance,
    PredicateFailed,
    UnauthorizedDeposit,
    DuplicateDeposit,
    // stateless mode only
    StaleWitness,
    WitnessInvalid,
    SpentSinceWitness,
};

inline const char* to_string(TxError e) {
    switch (e) {
        case TxError::BadStructure: return "BadStructure";
        case TxError::DoubleSpendWithinTx: return "DoubleSpendWithinTx";
        case TxError::MissingOutpoint: return "MissingOutpoint";
        case TxError::ImmatureOutpoint: return "ImmatureOutpoint";
        case TxError::ClaimMismatch: return "ClaimMismatch";
        case TxError::ValueImbalance: return "ValueImbalance";
        case TxError::PredicateFailed: return "PredicateFailed";
        case TxError::UnauthorizedDeposit: return "UnauthorizedDeposit";
        case TxError::DuplicateDeposit: return "DuplicateDeposit";
        case TxError::StaleWitness: return "StaleWitness";
        case TxError::WitnessInvalid: return "WitnessInvalid";
        case TxError::SpentSinceWitness: return "SpentSinceWitness";
    }
    return "?";
}

struct TxFailure {
    TxError error;
    std::uint32_t input_index = 0;  // meaningful for input-scoped errors
};

struct UtxoRecord {
    Output output;
    std::uint64_t created_height = 0;
    bool operator==(const UtxoRecord&) const = default;
};

struct LedgerState {
    std::map<Outpoint, UtxoRecord> utxo;
    Smt smt;  // commits utxo records and deposit-claim markers
    std::uint64_t height = 0;
    std::uint64_t freshness_window = 16;  // R: how many recent roots stateless txs may cite
    std::deque<std::pair<std::uint64_t, Digest>> recent_roots;  // (height, root), newest last
    std::set<std::uint64_t> claimed_deposits;
    std::uint64_t circulating = 0;    // sum of spendable (non-burn) output values
    std::uint64_t pending_burns = 0;  // committed burn outputs (withdrawal owed upstream)

    static LedgerState genesis(std::uint64_t freshness_window = 16) {
        LedgerState s;
        s.freshness_window = freshness_window;
        s.recent_roots.emplace_back(0, s.smt.root_hash());
        return s;
    }

    Digest state_root() const { return smt.root_hash(); }
};

// ---- single-transaction validation ----

namespace detail {

inline bool is_burn_predicate(const Predicate& p) { return p.kind == Predicate::Kind::Burn; }

// Structure-only rules: input/output shape per kind, burn form, no zero
// outputs. Needs no state, so every validation mode shares it.
inline std::optional<TxFailure> check_structure(const Transaction& tx) {
    for (const auto& out : tx.outputs)
        if (out.value == 0) return TxFailure{TxError::BadStructure};

    switch (tx.kind) {
        case Transaction::Kind::Transfer:
            if (tx.inputs.empty() || tx.outputs.empty()) return TxFailure{TxError::BadStructure};
            for (const auto& out : tx.outputs)
                if (is_burn_predicate(out.predicate)) return TxFailure{TxError::BadStructure};
            break;
        case Transaction::Kind::DepositClaim: {
            if (!tx.inputs.empty() || tx.outputs.size() != 1)
                return TxFailure{TxError::BadStructure};
            const Output& out = tx.outputs[0];
            if (out.value != tx.amount) return TxFailure{TxError::BadStructure};
            if (!(out.predicate == Predicate::pay_to_key(tx.recipient)))
                return TxFailure{TxError::BadStructure};
            break;
        }
        case Transaction::Kind::Burn: {
            if (tx.inputs.empty() || tx.outputs.empty()) return TxFailure{TxError::BadStructure};
            std::size_t burns = 0;
            for (const auto& out : tx.outputs) {
                if (!is_burn_predicate(out.predicate)) continue;
                ++burns;
                if (out.value != tx.amount || out.predicate.parent_recipient != tx.parent_recipient)
                    return TxFailure{TxError::BadStructure};
            }
            if (burns != 1) return TxFailure{TxError::BadStructure};
            break;
        }
        default: return TxFailure{TxError::BadStructure};
    }

    std::set<Outpoint> seen;
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i)
        if (!seen.insert(tx.inputs[i].outpoint).second)
            return TxFailure{TxError::DoubleSpendWithinTx, i};
    return std::nullopt;
}

inline std::optional<TxFailure> check_value(const Transaction& tx) {
    unsigned __int128 in_sum = 0, out_sum = 0;
    for (const auto& in : tx.inputs) in_sum += in.claim.value;
    for (const auto& out : tx.outputs) out_sum += out.value;
    if (tx.kind == Transaction::Kind::DepositClaim) in_sum += tx.amount;
    if (in_sum != out_sum) return TxFailure{TxError::ValueImbalance};
    return std::nullopt;
}

inline std::optional<TxFailure> check_predicates(const Transaction& tx,
                                                 std::uint64_t block_height) {
    if (tx.inputs.empty()) return std::nullopt;
    Digest sh = tx_sign_hash(tx);
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i)
        if (!check_predicate(tx.inputs[i].claim.predicate, tx.inputs[i].witness, sh, block_height))
            return TxFailure{TxError::PredicateFailed, i};
    return std::nullopt;
}

}  // namespace detail

// Core rules over any state view. View provides:
//   const UtxoRecord* find_utxo(const Outpoint&) const;   // nullptr = absent
//   bool deposit_claimed(std::uint64_t id) const;
template <class View>
std::optional<TxFailure> validate_tx_view(const View& view, const Transaction& tx,
                                          const DepositRegistry& deposits,
                                          std::uint64_t block_height) {
    if (auto f = detail::check_structure(tx)) return f;

    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i) {
        const UtxoRecord* rec = view.find_utxo(tx.inputs[i].outpoint);
        if (!rec) return TxFailure{TxError::MissingOutpoint, i};
        if (rec->created_height >= block_height) return TxFailure{TxError::ImmatureOutpoint, i};
    }
    for (std::uint32_t i = 0; i < tx.inputs.size(); ++i)
        if (!(view.find_utxo(tx.inputs[i].outpoint)->output == tx.inputs[i].claim))
            return TxFailure{TxError::ClaimMismatch, i};

    if (auto f = detail::check_value(tx)) return f;
    if (auto f = detail::check_predicates(tx, block_height)) return f;

    if (tx.kind == Transaction::Kind::DepositClaim) {
        auto it = deposits.find(tx.deposit_id);
        if (it == deposits.end() || it->second.recipient != tx.recipient ||
            it->second.amount != tx.amount)
            return TxFailure{TxError::UnauthorizedDeposit};
        if (view.deposit_claimed(tx.deposit_id)) return TxFailure{TxError::DuplicateDeposit};
    }

    // a tx may not recreate an outpoint that already exists
    Digest id = tx_id(tx);
    for (std::uint32_t i = 0; i < tx.outputs.size(); ++i)
        if (view.find_utxo(Outpoint{id, i})) return TxFailure{TxError::BadStructure};
    return std::nullopt;
}

namespace detail {
struct LedgerView {
    const LedgerState& state;
    const UtxoRecord* find_utxo(const Outpoint& op) const {
        auto it = state.utxo.find(op);
        return it == state.utxo.end() ? nullptr : &it->second;
    }
    bool deposit_claimed(std::uint64_t id) const { return state.claimed_deposits.contains(id); }
};
}  // namespace detail

// Validate `tx` as the next transaction of a block at height `block_height`
// applied on `state`. Mid-block, `state` is the running post-state of the
// txs before it, which is how the same-block-spend and duplicate-claim rules
// see intra-block effects.
inline std::optional<TxFailure> validate_transaction_ex(const LedgerState& state,
                                                        const Transaction& tx,
                                                        const DepositRegistry& deposits,
                                                        std::uint64_t block_height) {
    return validate_tx_view(detail::LedgerView{state}, tx, deposits, block_height);
}

inline std::optional<TxError> validate_transaction(const LedgerState& state, const Transaction& tx,
                                                   const DepositRegistry& deposits,
                                                   std::uint64_t block_height) {
    auto f = validate_transaction_ex(state, tx, deposits, block_height);
    return f ? std::optional(f->error) : std::nullopt;
}

// ---- block application ----

struct BlockDelta {
    std::vector<std::pair<Outpoint, UtxoRecord>> spent;
    std::vector<std::pair<Outpoint, UtxoRecord>> created;
    std::vector<std::uint64_t> claimed_deposits;
    std::vector<Digest> txids;
};

struct ApplyResult {
    enum class Status : std::uint8_t {
        Ok,
        WrongHeight,
        BodyRootMismatch,   // header txs_root or intermediate-root shape wrong
        StateRootMismatch,  // replay disagrees with a committed root
        TxInvalid,
    };

    Status status = Status::Ok;
    LedgerState state;  // post-state when Ok
    BlockDelta delta;
    // failure locus
    std::size_t tx_index = 0;
    std::size_t segment_index = 0;
    TxFailure failure{TxError::BadStructure};

    bool ok() const { return status == Status::Ok; }
};

inline std::size_t segment_count(std::size_t tx_count, std::uint64_t k) {
    return (tx_count + k - 1) / k;
}

namespace detail {

// Apply one already-validated tx to a working state.
inline void apply_tx(LedgerState& work, const Transaction& tx, const Digest& txid,
                     std::uint64_t block_height, BlockDelta* delta) {
    for (const auto& in : tx.inputs) {
        auto it = work.utxo.find(in.outpoint);
        if (delta) delta->spent.emplace_back(in.outpoint, it->second);
        work.circulating -= it->second.output.value;
        work.smt = work.smt.without(utxo_key(in.outpoint));
        work.utxo.erase(it);
    }
    for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi) {
        Outpoint op{txid, oi};
        UtxoRecord rec{tx.outputs[oi], block_height};
        work.utxo.emplace(op, rec);
        work.smt = work.smt.with(utxo_key(op), utxo_value_hash(rec.output, rec.created_height));
        if (is_burn_predicate(rec.output.predicate))
            work.pending_burns += rec.output.value;
        else
            work.circulating += rec.output.value;
        if (delta) delta->created.emplace_back(op, rec);
    }
    if (tx.kind == Transaction::Kind::DepositClaim) {
        work.claimed_deposits.insert(tx.deposit_id);
        work.smt = work.smt.with(deposit_key(tx.deposit_id), deposit_claimed_marker());
        if (delta) delta->claimed_deposits.push_back(tx.deposit_id);
    }
    if (delta) delta->txids.push_back(txid);
}

}  // namespace detail

// Apply a full block. `k` is the intermediate-root period from chain config.
// Structural failures (wrong txs_root, wrong intermediate-root shape) are
// reported distinctly because the bridge rejects those at submission; state
// mismatches and invalid txs are what fraud proofs exist for.
inline ApplyResult apply_block(const LedgerState& state, const SideBlock& block,
                               const DepositRegistry& deposits, std::uint64_t k) {
    ApplyResult res;
    if (k == 0) k = 1;
    if (block.header.height != state.height + 1) {
        res.status = ApplyResult::Status::WrongHeight;
        return res;
    }
    if (block_txs_root(block) != block.header.txs_root) {
        res.status = ApplyResult::Status::BodyRootMismatch;
        return res;
    }
    std::size_t nseg = segment_count(block.txs.size(), k);
    if (block.header.intermediate_roots.size() != nseg) {
        res.status = ApplyResult::Status::BodyRootMismatch;
        return res;
    }
    if (nseg > 0 && block.header.intermediate_roots.back() != block.header.state_root) {
        res.status = ApplyResult::Status::BodyRootMismatch;
        return res;
    }

    LedgerState work = state;
    work.height = block.header.height;
    BlockDelta delta;

    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        const Transaction& tx = block.txs[i];
        if (auto f = validate_transaction_ex(work, tx, deposits, block.header.height)) {
            res.status = ApplyResult::Status::TxInvalid;
            res.tx_index = i;
            res.segment_index = i / k;
            res.failure = *f;
            return res;
        }
        detail::apply_tx(work, tx, tx_id(tx), block.header.height, &delta);

        if ((i + 1) % k == 0 || i + 1 == block.txs.size()) {
            std::size_t seg = i / k;
            if (work.smt.root_hash() != block.header.intermediate_roots[seg]) {
                res.status = ApplyResult::Status::StateRootMismatch;
                res.tx_index = i;
                res.segment_index = seg;
                return res;
            }
        }
    }

    if (work.smt.root_hash() != block.header.state_root) {
        // only reachable for empty blocks (otherwise the last intermediate
        // root was already compared)
        res.status = ApplyResult::Status::StateRootMismatch;
        return res;
    }

    work.recent_roots.emplace_back(work.height, work.smt.root_hash());
    while (work.recent_roots.size() > work.freshness_window + 1) work.recent_roots.pop_front();

    res.state = std::move(work);
    res.delta = std::move(delta);
    return res;
}

// Replay only the first `ntx` transactions of a block, all of which must be
// valid. Fraud-proof generation uses this to materialize a segment's
// pre-state.
inline LedgerState replay_prefix(const LedgerState& state, const SideBlock& block,
                                 const DepositRegistry& deposits, std::size_t ntx) {
    LedgerState work = state;
    work.height = block.header.height;
    for (std::size_t i = 0; i < ntx; ++i) {
        const Transaction& tx = block.txs[i];
        if (validate_transaction_ex(work, tx, deposits, block.header.height))
            throw std::logic_error("replay_prefix: invalid tx in prefix");
        detail::apply_tx(work, tx, tx_id(tx), block.header.height, nullptr);
    }
    return work;
}

// ---- block building ----

// Assemble a block from a mempool snapshot: normalize each tx (drop wire
// framing, attach authoritative claims), skip anything invalid, commit
// roots. The result always passes apply_block against `state`.
inline SideBlock build_block(std::span<const Transaction> mempool, const LedgerState& state,
                             const DepositRegistry& deposits, const std::string& producer_id,
                             std::uint64_t bond, std::uint64_t k, const Digest& prev_header_hash,
                             std::size_t max_txs = std::size_t(1) << 20) {
    if (k == 0) k = 1;
    SideBlock block;
    block.header.prev_header_hash = prev_header_hash;
    block.header.height = state.height + 1;
    block.header.producer_id = producer_id;
    block.header.bond = bond;

    LedgerState work = state;
    work.height = block.header.height;

    for (const Transaction& raw : mempool) {
        if (block.txs.size() >= max_txs) break;
        Transaction tx = raw;
        tx.bundle.reset();
        bool claims_ok = true;
        for (auto& in : tx.inputs) {
            auto it = work.utxo.find(in.outpoint);
            if (it == work.utxo.end()) {
                claims_ok = false;
                break;
            }
            in.claim = it->second.output;
        }
        if (!claims_ok) continue;
        if (validate_transaction_ex(work, tx, deposits, block.header.height)) continue;

        detail::apply_tx(work, tx, tx_id(tx), block.header.height, nullptr);
        block.txs.push_back(std::move(tx));
        if (block.txs.size() % k == 0)
            block.header.intermediate_roots.push_back(work.smt.root_hash());
    }

    if (block.txs.size() % k != 0) block.header.intermediate_roots.push_back(work.smt.root_hash());
    block.header.txs_root = block_txs_root(block);
    block.header.state_root = work.smt.root_hash();
    return block;
}

// ---- stateless validation ----

// Validate a witness-carrying tx without any utxo-set lookups: each input is
// vouched for by an SMT membership proof against a recent committed root,
// plus the blocks since that root (to rule out in-between spends). Mirrors
// the stateful rules exactly on structure, value and predicates; deposit
// authorization still comes from the registry since it lives upstream.
inline std::optional<TxError> validate_stateless(
    const std::deque<std::pair<std::uint64_t, Digest>>& recent_roots, const Transaction& tx,
    std::span<const SideBlock> subsequent_blocks, const DepositRegistry& deposits,
    std::uint64_t next_block_height) {
    if (auto f = detail::check_structure(tx)) return f->error;

    if (!tx.inputs.empty()) {
        if (!tx.bundle || tx.bundle->witnesses.size() != tx.inputs.size())
            return TxError::WitnessInvalid;

        const Digest* ref_root = nullptr;
        for (const auto& [h, root] : recent_roots)
            if (h == tx.bundle->reference_root_height) ref_root = &root;
        if (!ref_root) return TxError::StaleWitness;

        for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
            const Input& in = tx.inputs[i];
            const StatelessWitness& sw = tx.bundle->witnesses[i];
            if (sw.proof.key != utxo_key(in.outpoint)) return TxError::WitnessInvalid;
            if (!sw.proof.value_hash ||
                *sw.proof.value_hash != utxo_value_hash(in.claim, sw.created_height))
                return TxError::WitnessInvalid;
            if (!Smt::verify(*ref_root, sw.proof)) return TxError::WitnessInvalid;
            if (sw.created_height >= next_block_height) return TxError::WitnessInvalid;
        }

        for (const auto& blk : subsequent_blocks) {
            if (blk.header.height <= tx.bundle->reference_root_height) continue;
            for (const auto& btx : blk.txs)
                for (const auto& bin : btx.inputs)
                    for (const auto& in : tx.inputs)
                        if (bin.outpoint == in.outpoint) return TxError::SpentSinceWitness;
        }
    }

    if (auto f = detail::check_value(tx)) return f->error;
    if (auto f = detail::check_predicates(tx, next_block_height)) return f->error;

    if (tx.kind == Transaction::Kind::DepositClaim) {
        auto it = deposits.find(tx.deposit_id);
        if (it == deposits.end() || it->second.recipient != tx.recipient ||
            it->second.amount != tx.amount)
            return TxError::UnauthorizedDeposit;
        for (const auto& blk : subsequent_blocks)
            for (const auto& btx : blk.txs)
                if (btx.kind == Transaction::Kind::DepositClaim && btx.deposit_id == tx.deposit_id)
                    return TxError::DuplicateDeposit;
    }
    return std::nullopt;
}

}  // namespace rollsim
