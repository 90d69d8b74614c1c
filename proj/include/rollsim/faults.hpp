#pragma once

// Adversarial block construction. Each injector takes an honestly built
// block and stages one specific consensus violation in it, then recommits
// the header roots the way a lying producer would: force-applying every tx
// without validation and committing whatever state results. The staged block
// still passes every check the bridge can do at submission (body root,
// intermediate-root shape, tip extension) — only replay can catch it, which
// is exactly the surface fraud proofs exist to cover.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "rollsim/block.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

enum class FaultKind : std::uint8_t {
    None = 0,
    ValueImbalance,       // outputs exceed inputs
    FalseClaim,           // claim metadata disagrees with the spent output
    DoubleSpend,          // re-includes a transaction whose inputs are spent
    DoubleSpendWithinTx,  // one tx spends the same outpoint twice
    MissingOutpoint,      // spends an outpoint that never existed
    BadStateRoot,         // valid txs, corrupted final state root
    BadIntermediateRoot,  // valid txs, corrupted mid-block root
    UnauthorizedDeposit,  // claims a deposit the registry never recorded
};

inline const char* to_string(FaultKind k) {
    switch (k) {
        case FaultKind::None: return "none";
        case FaultKind::ValueImbalance: return "value_imbalance";
        case FaultKind::FalseClaim: return "false_claim";
        case FaultKind::DoubleSpend: return "double_spend";
        case FaultKind::DoubleSpendWithinTx: return "double_spend_within_tx";
        case FaultKind::MissingOutpoint: return "missing_outpoint";
        case FaultKind::BadStateRoot: return "bad_state_root";
        case FaultKind::BadIntermediateRoot: return "bad_intermediate_root";
        case FaultKind::UnauthorizedDeposit: return "unauthorized_deposit";
    }
    return "?";
}

inline std::optional<FaultKind> parse_fault_kind(std::string_view s) {
    for (auto k : {FaultKind::None, FaultKind::ValueImbalance, FaultKind::FalseClaim,
                   FaultKind::DoubleSpend, FaultKind::DoubleSpendWithinTx,
                   FaultKind::MissingOutpoint, FaultKind::BadStateRoot,
                   FaultKind::BadIntermediateRoot, FaultKind::UnauthorizedDeposit})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

// Apply a tx with no validation at all, the way a producer that has stopped
// following the rules would. The tree is kept exact (it is what gets
// committed); the utxo mirror is best effort.
inline void force_apply_tx(LedgerState& work, const Transaction& tx, std::uint64_t block_height) {
    for (const auto& in : tx.inputs) {
        auto it = work.utxo.find(in.outpoint);
        if (it != work.utxo.end()) {
            work.circulating -= it->second.output.value;
            work.utxo.erase(it);
        }
        work.smt = work.smt.without(utxo_key(in.outpoint));
    }
    Digest txid = tx_id(tx);
    for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi) {
        Outpoint op{txid, oi};
        UtxoRecord rec{tx.outputs[oi], block_height};
        work.utxo[op] = rec;
        work.smt = work.smt.with(utxo_key(op), utxo_value_hash(rec.output, rec.created_height));
        if (rec.output.predicate.kind == Predicate::Kind::Burn)
            work.pending_burns += rec.output.value;
        else
            work.circulating += rec.output.value;
    }
    if (tx.kind == Transaction::Kind::DepositClaim) {
        work.claimed_deposits.insert(tx.deposit_id);
        work.smt = work.smt.with(deposit_key(tx.deposit_id), deposit_claimed_marker());
    }
}

// Recompute every header commitment from a force replay of the body.
inline SideBlock recommit_block(SideBlock block, const LedgerState& parent, std::uint64_t k) {
    if (k == 0) k = 1;
    LedgerState work = parent;
    work.height = block.header.height;
    block.header.intermediate_roots.clear();
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        force_apply_tx(work, block.txs[i], block.header.height);
        if ((i + 1) % k == 0 || i + 1 == block.txs.size())
            block.header.intermediate_roots.push_back(work.smt.root_hash());
    }
    block.header.txs_root = block_txs_root(block);
    block.header.state_root = work.smt.root_hash();
    return block;
}

// Extra material some faults need from the attacker's surroundings.
struct FaultContext {
    std::string beneficiary = "attacker";      // who fabricated coins pay
    std::optional<Transaction> respendable;    // an already-applied tx (DoubleSpend)
    std::uint64_t nonce = 0;                   // decorrelates repeated injections
};

// Stage `kind` on `honest` (a block that applies cleanly on `parent`).
// Returns nullopt when this block cannot host the fault — e.g. no transfer
// to tamper with, or too few segments for a mid-block root corruption.
inline std::optional<SideBlock> inject_fault(FaultKind kind, SideBlock honest,
                                             const LedgerState& parent, std::uint64_t k,
                                             const FaultContext& ctx = {}) {
    if (k == 0) k = 1;
    auto first_transfer = [&](bool needs_input) -> Transaction* {
        for (auto& tx : honest.txs)
            if (tx.kind == Transaction::Kind::Transfer && (!needs_input || !tx.inputs.empty()))
                return &tx;
        return nullptr;
    };

    switch (kind) {
        case FaultKind::None:
            return honest;
        case FaultKind::ValueImbalance: {
            Transaction* tx = first_transfer(false);
            if (!tx || tx->outputs.empty()) return std::nullopt;
            tx->outputs[0].value += 7;  // conjure value out of nothing
            break;
        }
        case FaultKind::FalseClaim: {
            Transaction* tx = first_transfer(true);
            if (!tx || tx->outputs.empty()) return std::nullopt;
            tx->inputs[0].claim.value += 5;  // pretend the spent output was richer
            tx->outputs[0].value += 5;       // keep the books balanced
            break;
        }
        case FaultKind::DoubleSpend: {
            if (!ctx.respendable || ctx.respendable->inputs.empty()) return std::nullopt;
            Transaction tx = *ctx.respendable;
            tx.bundle.reset();
            honest.txs.push_back(std::move(tx));
            break;
        }
        case FaultKind::DoubleSpendWithinTx: {
            Transaction* tx = first_transfer(true);
            if (!tx) return std::nullopt;
            tx->inputs.push_back(tx->inputs[0]);
            break;
        }
        case FaultKind::MissingOutpoint: {
            ByteWriter w;
            w.str("phantom");
            w.u64(honest.header.height);
            w.u64(ctx.nonce);
            Transaction tx;
            tx.kind = Transaction::Kind::Transfer;
            Input in;
            in.outpoint = Outpoint{sha256(std::move(w).take()), 0};
            in.claim = Output{13, Predicate::pay_to_key(ctx.beneficiary)};
            tx.inputs.push_back(std::move(in));
            tx.outputs.push_back(Output{13, Predicate::pay_to_key(ctx.beneficiary)});
            tx.inputs[0].witness = make_pay_witness(ctx.beneficiary, tx_sign_hash(tx));
            honest.txs.push_back(std::move(tx));
            break;
        }
        case FaultKind::BadStateRoot: {
            if (honest.txs.empty()) return std::nullopt;
            SideBlock b = recommit_block(std::move(honest), parent, k);
            b.header.state_root.bytes[0] ^= 0x40;
            b.header.intermediate_roots.back() = b.header.state_root;
            return b;
        }
        case FaultKind::BadIntermediateRoot: {
            SideBlock b = recommit_block(std::move(honest), parent, k);
            if (b.header.intermediate_roots.size() < 2) return std::nullopt;
            std::size_t mid = b.header.intermediate_roots.size() - 2;
            b.header.intermediate_roots[mid].bytes[0] ^= 0x40;
            return b;
        }
        case FaultKind::UnauthorizedDeposit: {
            Transaction tx;
            tx.kind = Transaction::Kind::DepositClaim;
            tx.deposit_id = 0xFFFF'0000'0000'0000ull + ctx.nonce;
            tx.amount = 21;
            tx.recipient = ctx.beneficiary;
            tx.outputs.push_back(Output{21, Predicate::pay_to_key(ctx.beneficiary)});
            honest.txs.push_back(std::move(tx));
            break;
        }
    }
    return recommit_block(std::move(honest), parent, k);
}

}  // namespace rollsim
