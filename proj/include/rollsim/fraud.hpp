#pragma once

// Fraud proofs. Two independent schemes prove a committed side block
// invalid to a verifier that holds only headers and the deposit registry:
//
//  Scheme A (tag 0xA0) — intermediate state roots. Replays one k-tx segment
//  from sparse-tree witnesses against the segment's committed pre-root and
//  shows either an invalid tx or a post-root that differs from the committed
//  one. Complete: refutes every invalid block.
//
//  Scheme B (tag 0xB0) — claim metadata. Uses the producer-attested
//  spent-output claims committed in the block to refute a single spend with
//  no state replay at all: exhibit the creating tx and a mismatching output
//  (OutputMismatch), exhibit a strictly earlier spend of the same outpoint
//  (PriorSpend), or prove the outpoint absent from the parent state root
//  (NoSuchOutput). Cheaper, but only covers claim/spend faults.
//
// Verification is written against whatever header lookup the caller has; the
// bridge adapts its own record map. Verdicts distinguish "the proof is
// garbage" (Malformed) from "well-formed but does not demonstrate fraud"
// (NotFraud / DoesNotApply): only Fraud triggers a rollback.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/smt.hpp"

namespace rollsim {

inline constexpr std::uint8_t kSchemeATag = 0xA0;
inline constexpr std::uint8_t kSchemeBTag = 0xB0;

// What a verifier knows about a committed header.
struct CommittedHeader {
    SideBlockHeader header;
    Digest hash;
    std::uint64_t tx_count = 0;

    bool operator==(const CommittedHeader&) const = default;
};

// Header lookup: hash -> record, nullptr when unknown. Orphaned headers are
// expected to be filtered out by the caller (they are no longer disputable).
using HeaderLookup = std::function<const CommittedHeader*(const Digest&)>;

struct FraudVerdict {
    enum class Outcome : std::uint8_t {
        Fraud,
        NotFraud,             // replay matched the commitment
        DoesNotApply,         // well-formed refutation that refutes nothing
        UnknownHeader,
        Malformed,
    };
    Outcome outcome = Outcome::Malformed;
    Digest accused;           // set when outcome == Fraud
    std::string detail;

    bool is_fraud() const { return outcome == Outcome::Fraud; }
};

// ---- scheme A ----

struct SmtWitnessEntry {
    enum class Kind : std::uint8_t { Utxo = 0, Deposit = 1 };
    Kind kind = Kind::Utxo;
    Outpoint outpoint;                 // Utxo
    std::uint64_t deposit_id = 0;      // Deposit
    Output output;                     // Utxo, present only: value preimage
    std::uint64_t created_height = 0;  // Utxo, present only
    SmtProof proof;

    bool present() const { return proof.value_hash.has_value(); }
    bool operator==(const SmtWitnessEntry&) const = default;
};

struct FraudProofA {
    Digest accused_header_hash;
    std::uint32_t segment_index = 0;
    Digest pre_root;            // committed pre-state root of the segment
    Digest expected_post_root;  // committed post-root being disputed
    std::vector<std::pair<Bytes, MerkleProof>> txs;  // canonical bytes + inclusion
    std::vector<SmtWitnessEntry> witnesses;

    bool operator==(const FraudProofA&) const = default;
};

// ---- scheme B ----

struct FraudProofB {
    enum class Variant : std::uint8_t { OutputMismatch = 0, PriorSpend = 1, NoSuchOutput = 2 };

    Digest accused_header_hash;
    Bytes accused_tx;  // canonical bytes of the tx with the bad spend
    MerkleProof accused_inclusion;
    std::uint32_t input_index = 0;
    Variant variant = Variant::NoSuchOutput;
    // OutputMismatch: the creating tx; PriorSpend: the earlier spending tx
    Digest ref_header_hash;
    Bytes ref_tx;
    MerkleProof ref_inclusion;
    std::uint32_t prior_input_index = 0;  // PriorSpend
    SmtProof absence;                     // NoSuchOutput, against parent state root

    bool operator==(const FraudProofB&) const = default;
};

using FraudProof = std::variant<FraudProofA, FraudProofB>;

// ---- encoding ----

inline Bytes encode_fraud_proof(const FraudProofA& p) {
    ByteWriter w;
    w.u8(kSchemeATag);
    w.digest(p.accused_header_hash);
    w.u32(p.segment_index);
    w.digest(p.pre_root);
    w.digest(p.expected_post_root);
    w.u32(static_cast<std::uint32_t>(p.txs.size()));
    for (const auto& [bytes, proof] : p.txs) {
        w.var_bytes(bytes);
        w.var_bytes(encode_merkle_proof(proof));
    }
    w.u32(static_cast<std::uint32_t>(p.witnesses.size()));
    for (const auto& e : p.witnesses) {
        w.u8(static_cast<std::uint8_t>(e.kind));
        if (e.kind == SmtWitnessEntry::Kind::Utxo)
            w.raw(encode_outpoint(e.outpoint));
        else
            w.u64(e.deposit_id);
        w.u8(e.present() ? 1 : 0);
        if (e.present() && e.kind == SmtWitnessEntry::Kind::Utxo) {
            w.var_bytes(encode_output(e.output));
            w.u64(e.created_height);
        }
        w.var_bytes(encode_smt_proof(e.proof));
    }
    return std::move(w).take();
}

inline Bytes encode_fraud_proof(const FraudProofB& p) {
    ByteWriter w;
    w.u8(kSchemeBTag);
    w.digest(p.accused_header_hash);
    w.var_bytes(p.accused_tx);
    w.var_bytes(encode_merkle_proof(p.accused_inclusion));
    w.u32(p.input_index);
    w.u8(static_cast<std::uint8_t>(p.variant));
    switch (p.variant) {
        case FraudProofB::Variant::OutputMismatch:
            w.digest(p.ref_header_hash);
            w.var_bytes(p.ref_tx);
            w.var_bytes(encode_merkle_proof(p.ref_inclusion));
            break;
        case FraudProofB::Variant::PriorSpend:
            w.digest(p.ref_header_hash);
            w.var_bytes(p.ref_tx);
            w.var_bytes(encode_merkle_proof(p.ref_inclusion));
            w.u32(p.prior_input_index);
            break;
        case FraudProofB::Variant::NoSuchOutput:
            w.var_bytes(encode_smt_proof(p.absence));
            break;
    }
    return std::move(w).take();
}

inline Bytes encode_fraud_proof(const FraudProof& p) {
    return std::visit([](const auto& q) { return encode_fraud_proof(q); }, p);
}

inline FraudProof decode_fraud_proof(std::span<const std::uint8_t> data) {
    ByteReader r(data);
    switch (r.u8()) {
        case kSchemeATag: {
            FraudProofA p;
            p.accused_header_hash = r.digest();
            p.segment_index = r.u32();
            p.pre_root = r.digest();
            p.expected_post_root = r.digest();
            std::uint32_t ntx = r.u32();
            for (std::uint32_t i = 0; i < ntx; ++i) {
                Bytes tx = r.var_bytes();
                MerkleProof mp = decode_merkle_proof(r.var_bytes());
                p.txs.emplace_back(std::move(tx), std::move(mp));
            }
            std::uint32_t nw = r.u32();
            for (std::uint32_t i = 0; i < nw; ++i) {
                SmtWitnessEntry e;
                switch (r.u8()) {
                    case 0: e.kind = SmtWitnessEntry::Kind::Utxo; break;
                    case 1: e.kind = SmtWitnessEntry::Kind::Deposit; break;
                    default: throw DecodeError("witness kind");
                }
                if (e.kind == SmtWitnessEntry::Kind::Utxo) {
                    e.outpoint.txid = r.digest();
                    e.outpoint.index = r.u32();
                } else {
                    e.deposit_id = r.u64();
                }
                std::uint8_t present = r.u8();
                if (present > 1) throw DecodeError("witness present flag");
                if (present && e.kind == SmtWitnessEntry::Kind::Utxo) {
                    e.output = decode_output(r.var_bytes());
                    e.created_height = r.u64();
                }
                e.proof = decode_smt_proof(r.var_bytes());
                if (e.proof.value_hash.has_value() != static_cast<bool>(present))
                    throw DecodeError("witness flag contradicts proof");
                p.witnesses.push_back(std::move(e));
            }
            r.expect_end();
            return p;
        }
        case kSchemeBTag: {
            FraudProofB p;
            p.accused_header_hash = r.digest();
            p.accused_tx = r.var_bytes();
            p.accused_inclusion = decode_merkle_proof(r.var_bytes());
            p.input_index = r.u32();
            switch (r.u8()) {
                case 0: p.variant = FraudProofB::Variant::OutputMismatch; break;
                case 1: p.variant = FraudProofB::Variant::PriorSpend; break;
                case 2: p.variant = FraudProofB::Variant::NoSuchOutput; break;
                default: throw DecodeError("refutation variant");
            }
            if (p.variant == FraudProofB::Variant::NoSuchOutput) {
                p.absence = decode_smt_proof(r.var_bytes());
            } else {
                p.ref_header_hash = r.digest();
                p.ref_tx = r.var_bytes();
                p.ref_inclusion = decode_merkle_proof(r.var_bytes());
                if (p.variant == FraudProofB::Variant::PriorSpend) p.prior_input_index = r.u32();
            }
            r.expect_end();
            return p;
        }
        default: throw DecodeError("fraud proof scheme tag");
    }
}

// ---- scheme A verification ----

namespace detail {

// State view reconstructed from witnesses: the partial tree carries the
// commitment, a preimage table carries the decodable content. Both evolve
// together during replay.
struct ReplayView {
    PartialSmt partial;
    std::map<Digest, UtxoRecord> utxo_preimage;  // smt key -> record (present keys only)

    const UtxoRecord* find_utxo(const Outpoint& op) const {
        Digest key = utxo_key(op);
        auto vh = partial.value_hash(key);
        if (!vh) return nullptr;  // unknown keys are pre-screened before validation
        auto it = utxo_preimage.find(key);
        return it == utxo_preimage.end() ? nullptr : &it->second;
    }
    bool deposit_claimed(std::uint64_t id) const {
        return partial.value_hash(deposit_key(id)).has_value();
    }
};

}  // namespace detail

inline FraudVerdict verify_fraud_proof_a(const HeaderLookup& find_header,
                                         const DepositRegistry& deposits, std::uint64_t k,
                                         const FraudProofA& proof) {
    auto malformed = [&](std::string why) {
        return FraudVerdict{FraudVerdict::Outcome::Malformed, {}, std::move(why)};
    };
    auto fraud = [&](std::string why) {
        return FraudVerdict{FraudVerdict::Outcome::Fraud, proof.accused_header_hash,
                            std::move(why)};
    };
    if (k == 0) k = 1;

    const CommittedHeader* accused = find_header(proof.accused_header_hash);
    if (!accused) return {FraudVerdict::Outcome::UnknownHeader, {}, "accused header unknown"};
    const CommittedHeader* parent = find_header(accused->header.prev_header_hash);
    if (!parent) return malformed("parent header unknown");

    std::uint64_t n = accused->tx_count;
    if (n == 0) return malformed("empty block has no segments");
    std::size_t nseg = segment_count(n, k);
    if (accused->header.intermediate_roots.size() != nseg)
        return malformed("header intermediate-root shape wrong");
    if (proof.segment_index >= nseg) return malformed("segment out of range");

    Digest expected_pre = proof.segment_index == 0
                              ? parent->header.state_root
                              : accused->header.intermediate_roots[proof.segment_index - 1];
    if (proof.pre_root != expected_pre) return malformed("pre-root not the committed one");
    if (proof.expected_post_root != accused->header.intermediate_roots[proof.segment_index])
        return malformed("post-root not the committed one");

    // Transactions of the segment, bound to the body commitment.
    std::uint64_t lo = std::uint64_t(proof.segment_index) * k;
    std::uint64_t hi = std::min<std::uint64_t>(lo + k, n);
    if (proof.txs.size() != hi - lo) return malformed("wrong segment tx count");
    std::vector<Transaction> txs;
    for (std::uint64_t j = 0; j < proof.txs.size(); ++j) {
        const auto& [bytes, inclusion] = proof.txs[j];
        if (inclusion.tree_size != n || inclusion.leaf_index != lo + j)
            return malformed("tx inclusion proof at wrong position");
        if (!merkle_verify(accused->header.txs_root, bytes, inclusion))
            return malformed("tx inclusion proof failed");
        try {
            txs.push_back(decode_tx_canonical(bytes));
        } catch (const DecodeError&) {
            // the body commits to undecodable bytes: builders can never
            // produce this, so the block is fraudulent on its face
            return fraud("committed tx bytes do not decode");
        }
    }

    // Witness table.
    std::vector<SmtProof> smt_proofs;
    detail::ReplayView view;
    for (const auto& e : proof.witnesses) {
        Digest key = e.kind == SmtWitnessEntry::Kind::Utxo ? utxo_key(e.outpoint)
                                                           : deposit_key(e.deposit_id);
        if (e.proof.key != key) return malformed("witness key mismatch");
        if (e.present() && e.kind == SmtWitnessEntry::Kind::Utxo) {
            if (*e.proof.value_hash != utxo_value_hash(e.output, e.created_height))
                return malformed("witness value preimage mismatch");
            view.utxo_preimage[key] = UtxoRecord{e.output, e.created_height};
        }
        smt_proofs.push_back(e.proof);
    }
    auto partial = PartialSmt::from_witnesses(proof.pre_root, smt_proofs);
    if (!partial) return malformed("witnesses inconsistent with pre-root");
    view.partial = std::move(*partial);

    // Replay. Every key a tx touches must have been witnessed; a gap is the
    // prover's failure, not evidence about the block.
    for (std::size_t i = 0; i < txs.size(); ++i) {
        const Transaction& tx = txs[i];
        Digest txid = tx_id(tx);
        for (const auto& in : tx.inputs)
            if (!view.partial.knows(utxo_key(in.outpoint))) return malformed("unwitnessed input");
        for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi)
            if (!view.partial.knows(utxo_key(Outpoint{txid, oi})))
                return malformed("unwitnessed created outpoint");
        if (tx.kind == Transaction::Kind::DepositClaim &&
            !view.partial.knows(deposit_key(tx.deposit_id)))
            return malformed("unwitnessed deposit marker");

        if (auto f = validate_tx_view(view, tx, deposits, accused->header.height))
            return fraud(std::string("invalid tx in segment: ") + to_string(f->error));

        for (const auto& in : tx.inputs) {
            Digest key = utxo_key(in.outpoint);
            view.partial.update(key, std::nullopt);
            view.utxo_preimage.erase(key);
        }
        for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi) {
            Outpoint op{txid, oi};
            Digest key = utxo_key(op);
            UtxoRecord rec{tx.outputs[oi], accused->header.height};
            view.partial.update(key, utxo_value_hash(rec.output, rec.created_height));
            view.utxo_preimage[key] = rec;
        }
        if (tx.kind == Transaction::Kind::DepositClaim)
            view.partial.update(deposit_key(tx.deposit_id), deposit_claimed_marker());
    }

    if (view.partial.root() != proof.expected_post_root)
        return fraud("segment replay disagrees with committed root");
    return {FraudVerdict::Outcome::NotFraud, {}, "segment replays cleanly"};
}

// ---- scheme B verification ----

namespace detail {

// Is `anc` an ancestor of (or equal to) `desc`? Committed headers form a
// single path, so walking prev links by height suffices.
inline bool is_ancestor_or_self(const HeaderLookup& find_header, const CommittedHeader* anc,
                                const CommittedHeader* desc) {
    const CommittedHeader* cur = desc;
    while (cur && cur->header.height > anc->header.height)
        cur = find_header(cur->header.prev_header_hash);
    return cur && cur->hash == anc->hash;
}

}  // namespace detail

inline FraudVerdict verify_fraud_proof_b(const HeaderLookup& find_header, const FraudProofB& proof) {
    auto malformed = [&](std::string why) {
        return FraudVerdict{FraudVerdict::Outcome::Malformed, {}, std::move(why)};
    };
    auto fraud = [&](std::string why) {
        return FraudVerdict{FraudVerdict::Outcome::Fraud, proof.accused_header_hash,
                            std::move(why)};
    };

    const CommittedHeader* accused = find_header(proof.accused_header_hash);
    if (!accused) return {FraudVerdict::Outcome::UnknownHeader, {}, "accused header unknown"};

    if (proof.accused_inclusion.tree_size != accused->tx_count)
        return malformed("accused inclusion size mismatch");
    if (!merkle_verify(accused->header.txs_root, proof.accused_tx, proof.accused_inclusion))
        return malformed("accused tx inclusion failed");
    Transaction accused_tx;
    try {
        accused_tx = decode_tx_canonical(proof.accused_tx);
    } catch (const DecodeError&) {
        return fraud("committed tx bytes do not decode");
    }
    if (proof.input_index >= accused_tx.inputs.size()) return malformed("input index out of range");
    const Input& spend = accused_tx.inputs[proof.input_index];

    switch (proof.variant) {
        case FraudProofB::Variant::OutputMismatch: {
            const CommittedHeader* ref = find_header(proof.ref_header_hash);
            if (!ref) return malformed("creating header unknown");
            if (!detail::is_ancestor_or_self(find_header, ref, accused))
                return malformed("creating header not an ancestor");
            if (proof.ref_inclusion.tree_size != ref->tx_count)
                return malformed("creating inclusion size mismatch");
            if (!merkle_verify(ref->header.txs_root, proof.ref_tx, proof.ref_inclusion))
                return malformed("creating tx inclusion failed");
            if (hash_leaf(proof.ref_tx) != spend.outpoint.txid)
                return malformed("exhibited tx is not the creating tx");
            Transaction creating;
            try {
                creating = decode_tx_canonical(proof.ref_tx);
            } catch (const DecodeError&) {
                return fraud("committed tx bytes do not decode");
            }
            if (spend.outpoint.index >= creating.outputs.size())
                return fraud("claimed output index does not exist");
            if (!(creating.outputs[spend.outpoint.index] == spend.claim))
                return fraud("committed claim differs from the created output");
            return {FraudVerdict::Outcome::DoesNotApply, {}, "claim matches the created output"};
        }
        case FraudProofB::Variant::PriorSpend: {
            const CommittedHeader* ref = find_header(proof.ref_header_hash);
            if (!ref) return malformed("prior header unknown");
            if (!detail::is_ancestor_or_self(find_header, ref, accused))
                return malformed("prior header not an ancestor");
            if (proof.ref_inclusion.tree_size != ref->tx_count)
                return malformed("prior inclusion size mismatch");
            if (!merkle_verify(ref->header.txs_root, proof.ref_tx, proof.ref_inclusion))
                return malformed("prior tx inclusion failed");
            Transaction prior;
            try {
                prior = decode_tx_canonical(proof.ref_tx);
            } catch (const DecodeError&) {
                return fraud("committed tx bytes do not decode");
            }
            if (proof.prior_input_index >= prior.inputs.size())
                return malformed("prior input index out of range");
            if (!(prior.inputs[proof.prior_input_index].outpoint == spend.outpoint))
                return malformed("prior spend is of a different outpoint");

            bool earlier;
            if (ref->hash != accused->hash)
                earlier = ref->header.height < accused->header.height;
            else if (proof.ref_inclusion.leaf_index != proof.accused_inclusion.leaf_index)
                earlier = proof.ref_inclusion.leaf_index < proof.accused_inclusion.leaf_index;
            else
                earlier = proof.prior_input_index < proof.input_index;
            if (!earlier)
                return {FraudVerdict::Outcome::DoesNotApply, {}, "exhibited spend is not earlier"};
            return fraud("outpoint already spent");
        }
        case FraudProofB::Variant::NoSuchOutput: {
            const CommittedHeader* parent = find_header(accused->header.prev_header_hash);
            if (!parent) return malformed("parent header unknown");
            if (proof.absence.key != utxo_key(spend.outpoint))
                return malformed("absence proof for the wrong key");
            if (proof.absence.value_hash) return malformed("absence proof proves membership");
            if (!Smt::verify(parent->header.state_root, proof.absence))
                return malformed("absence proof does not verify");
            return fraud("spent outpoint absent from parent state");
        }
    }
    return malformed("unreachable");
}

inline FraudVerdict verify_fraud_proof(const HeaderLookup& find_header,
                                       const DepositRegistry& deposits, std::uint64_t k,
                                       const FraudProof& proof) {
    if (const auto* a = std::get_if<FraudProofA>(&proof))
        return verify_fraud_proof_a(find_header, deposits, k, *a);
    return verify_fraud_proof_b(find_header, std::get<FraudProofB>(proof));
}

// ---- generation ----

// Scheme A: replay the block, find the earliest fault, ship the faulty
// segment with every witness its replay touches. Returns nullopt when the
// block applies cleanly (nothing to prove) or the fault is structural
// (the bridge rejects those at submission, so they can never be committed).
inline std::optional<FraudProofA> generate_proof_a(const LedgerState& parent_state,
                                                   const SideBlock& block,
                                                   const DepositRegistry& deposits,
                                                   std::uint64_t k) {
    if (k == 0) k = 1;
    if (block.txs.empty()) return std::nullopt;  // rejected at submission, never committed
    ApplyResult res = apply_block(parent_state, block, deposits, k);
    if (res.ok()) return std::nullopt;
    if (res.status != ApplyResult::Status::TxInvalid &&
        res.status != ApplyResult::Status::StateRootMismatch)
        return std::nullopt;

    std::size_t seg = res.segment_index;
    std::uint64_t lo = seg * k;
    std::uint64_t hi = std::min<std::uint64_t>(lo + k, block.txs.size());

    LedgerState pre = replay_prefix(parent_state, block, deposits, lo);

    FraudProofA proof;
    proof.accused_header_hash = header_hash(block.header);
    proof.segment_index = static_cast<std::uint32_t>(seg);
    proof.pre_root = pre.smt.root_hash();
    proof.expected_post_root = block.header.intermediate_roots[seg];

    auto leaves = block_tx_leaves(block);
    std::vector<Digest> leaf_hashes;
    leaf_hashes.reserve(leaves.size());
    for (const auto& l : leaves) leaf_hashes.push_back(hash_leaf(l));
    for (std::uint64_t j = lo; j < hi; ++j)
        proof.txs.emplace_back(leaves[j], merkle_prove_hashed(leaf_hashes, j));

    // Touched keys, deduped: inputs, created outpoints, deposit markers.
    std::set<Digest> seen;
    for (std::uint64_t j = lo; j < hi; ++j) {
        const Transaction& tx = block.txs[j];
        Digest txid = tx_id(tx);
        auto add_utxo = [&](const Outpoint& op) {
            if (!seen.insert(utxo_key(op)).second) return;
            SmtWitnessEntry e;
            e.kind = SmtWitnessEntry::Kind::Utxo;
            e.outpoint = op;
            e.proof = pre.smt.prove(utxo_key(op));
            if (e.present()) {
                const UtxoRecord& rec = pre.utxo.at(op);
                e.output = rec.output;
                e.created_height = rec.created_height;
            }
            proof.witnesses.push_back(std::move(e));
        };
        for (const auto& in : tx.inputs) add_utxo(in.outpoint);
        for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi) add_utxo(Outpoint{txid, oi});
        if (tx.kind == Transaction::Kind::DepositClaim &&
            seen.insert(deposit_key(tx.deposit_id)).second) {
            SmtWitnessEntry e;
            e.kind = SmtWitnessEntry::Kind::Deposit;
            e.deposit_id = tx.deposit_id;
            e.proof = pre.smt.prove(deposit_key(tx.deposit_id));
            proof.witnesses.push_back(std::move(e));
        }
    }
    return proof;
}

// Location index a watcher keeps over the committed chain, for scheme B.
struct TxLocation {
    Digest header_hash;
    std::uint64_t height = 0;
    std::uint64_t tx_index = 0;
};

struct SpendLocation {
    Digest header_hash;
    std::uint64_t height = 0;
    std::uint64_t tx_index = 0;
    std::uint32_t input_index = 0;
};

struct ChainIndex {
    std::map<Digest, TxLocation> tx_by_id;
    std::map<Outpoint, SpendLocation> first_spend;

    void index_block(const SideBlock& block, const Digest& hash) {
        for (std::uint64_t i = 0; i < block.txs.size(); ++i) {
            const Transaction& tx = block.txs[i];
            Digest id = tx_id(tx);
            tx_by_id.emplace(id, TxLocation{hash, block.header.height, i});
            for (std::uint32_t j = 0; j < tx.inputs.size(); ++j)
                first_spend.emplace(tx.inputs[j].outpoint,
                                    SpendLocation{hash, block.header.height, i, j});
        }
    }
};

// Scheme B: covers claim mismatches and double/phantom spends. `blocks`
// resolves header hashes the refutation cites to bodies (the accused block
// itself plus committed ancestors). Returns nullopt when the fault kind
// needs scheme A.
inline std::optional<FraudProofB> generate_proof_b(
    const ChainIndex& committed, const std::map<Digest, SideBlock>& blocks,
    const LedgerState& parent_state, const SideBlock& block, const DepositRegistry& deposits,
    std::uint64_t k) {
    if (k == 0) k = 1;
    ApplyResult res = apply_block(parent_state, block, deposits, k);
    if (res.ok() || res.status != ApplyResult::Status::TxInvalid) return std::nullopt;

    const Transaction& bad = block.txs[res.tx_index];
    Digest accused_hash = header_hash(block.header);

    // Extend the committed view with the accused block itself: its earlier
    // txs are legitimate refutation material.
    ChainIndex local = committed;
    SideBlock accused_prefix;  // only txs before the faulty one matter
    accused_prefix.header = block.header;
    accused_prefix.txs.assign(block.txs.begin(), block.txs.begin() + res.tx_index);
    local.index_block(accused_prefix, accused_hash);

    auto leaves = block_tx_leaves(block);
    std::vector<Digest> leaf_hashes;
    for (const auto& l : leaves) leaf_hashes.push_back(hash_leaf(l));

    FraudProofB proof;
    proof.accused_header_hash = accused_hash;
    proof.accused_tx = leaves[res.tx_index];
    proof.accused_inclusion = merkle_prove_hashed(leaf_hashes, res.tx_index);
    proof.input_index = res.failure.input_index;

    auto cite = [&](const Digest& hdr, std::uint64_t tx_index) -> bool {
        if (hdr == accused_hash) {
            proof.ref_header_hash = accused_hash;
            proof.ref_tx = leaves[tx_index];
            proof.ref_inclusion = merkle_prove_hashed(leaf_hashes, tx_index);
            return true;
        }
        auto it = blocks.find(hdr);
        if (it == blocks.end()) return false;
        auto ref_leaves = block_tx_leaves(it->second);
        proof.ref_header_hash = hdr;
        proof.ref_tx = ref_leaves[tx_index];
        proof.ref_inclusion = merkle_prove(ref_leaves, tx_index);
        return true;
    };

    if (bad.inputs.empty()) return std::nullopt;
    const Outpoint op = bad.inputs[res.failure.input_index].outpoint;
    switch (res.failure.error) {
        case TxError::ClaimMismatch: {
            auto it = local.tx_by_id.find(op.txid);
            if (it == local.tx_by_id.end()) return std::nullopt;
            proof.variant = FraudProofB::Variant::OutputMismatch;
            if (!cite(it->second.header_hash, it->second.tx_index)) return std::nullopt;
            return proof;
        }
        case TxError::DoubleSpendWithinTx: {
            proof.variant = FraudProofB::Variant::PriorSpend;
            for (std::uint32_t j = 0; j < res.failure.input_index; ++j)
                if (bad.inputs[j].outpoint == op) {
                    proof.prior_input_index = j;
                    break;
                }
            proof.ref_header_hash = accused_hash;
            proof.ref_tx = proof.accused_tx;
            proof.ref_inclusion = proof.accused_inclusion;
            return proof;
        }
        case TxError::MissingOutpoint:
        case TxError::ImmatureOutpoint: {
            auto spent = local.first_spend.find(op);
            if (spent != local.first_spend.end()) {
                proof.variant = FraudProofB::Variant::PriorSpend;
                proof.prior_input_index = spent->second.input_index;
                if (!cite(spent->second.header_hash, spent->second.tx_index)) return std::nullopt;
                return proof;
            }
            // never spent on this chain: it must be absent from the parent
            // state (phantom, or created later in the accused block itself)
            if (parent_state.utxo.contains(op)) return std::nullopt;
            proof.variant = FraudProofB::Variant::NoSuchOutput;
            proof.absence = parent_state.smt.prove(utxo_key(op));
            return proof;
        }
        default:
            return std::nullopt;  // value/predicate/deposit faults need scheme A
    }
}

}  // namespace rollsim
