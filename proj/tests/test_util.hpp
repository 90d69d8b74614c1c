#pragma once

// Shared scaffolding for the test suites: deterministic random generators
// for fuzz passes, and a little chain-builder that mirrors what a producer
// plus bridge would do so ledger/fraud tests can set up scenarios tersely.

#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/fraud.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/tx.hpp"

namespace testutil {

using namespace rollsim;

inline Digest random_digest(std::mt19937_64& rng) {
    Digest d;
    for (auto& b : d.bytes) b = static_cast<std::uint8_t>(rng());
    return d;
}

inline std::string random_name(std::mt19937_64& rng) {
    static const char* names[] = {"alice", "bob", "carol", "dave", "erin", "frank", "peggy", ""};
    return names[rng() % 8];
}

inline Predicate random_predicate(std::mt19937_64& rng, int depth = 0) {
    std::uint64_t pick = rng() % (depth >= 3 ? 3 : 4);
    if (pick == 0) return Predicate::pay_to_key(random_name(rng));
    if (pick == 1) return Predicate::hash_lock(random_digest(rng));
    if (pick == 2) return Predicate::burn(random_name(rng));
    return Predicate::time_lock(rng() % 1000, random_predicate(rng, depth + 1));
}

inline Output random_output(std::mt19937_64& rng) {
    return Output{rng() % 1000, random_predicate(rng)};  // zero values allowed: codec != rules
}

inline Bytes random_bytes(std::mt19937_64& rng, std::size_t max_len) {
    Bytes b(rng() % (max_len + 1));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
}

inline SmtProof random_smt_proof(std::mt19937_64& rng) {
    SmtProof p;
    p.key = random_digest(rng);
    if (rng() % 2) p.value_hash = random_digest(rng);
    std::size_t nsib = 0;
    for (auto& byte : p.bitmap)
        if (rng() % 16 == 0) {
            byte = static_cast<std::uint8_t>(1u << (rng() % 8));
            ++nsib;
        }
    for (std::size_t i = 0; i < nsib; ++i) p.siblings.push_back(random_digest(rng));
    return p;
}

// Arbitrary encodable transaction; semantic validity is not the point.
inline Transaction random_tx(std::mt19937_64& rng) {
    Transaction tx;
    switch (rng() % 3) {
        case 0: tx.kind = Transaction::Kind::Transfer; break;
        case 1:
            tx.kind = Transaction::Kind::DepositClaim;
            tx.deposit_id = rng();
            tx.amount = rng() % 10000;
            tx.recipient = random_name(rng);
            break;
        case 2:
            tx.kind = Transaction::Kind::Burn;
            tx.amount = rng() % 10000;
            tx.parent_recipient = random_name(rng);
            break;
    }
    std::size_t nin = rng() % 4;
    for (std::size_t i = 0; i < nin; ++i) {
        Input in;
        in.outpoint = Outpoint{random_digest(rng), static_cast<std::uint32_t>(rng() % 8)};
        in.witness = random_bytes(rng, 40);
        in.claim = random_output(rng);
        tx.inputs.push_back(std::move(in));
    }
    std::size_t nout = rng() % 4;
    for (std::size_t i = 0; i < nout; ++i) tx.outputs.push_back(random_output(rng));
    if (rng() % 4 == 0) {
        WitnessBundle b;
        b.reference_root_height = rng() % 100;
        std::size_t nw = rng() % 3;
        for (std::size_t i = 0; i < nw; ++i)
            b.witnesses.push_back(StatelessWitness{rng() % 100, random_smt_proof(rng)});
        tx.bundle = std::move(b);
    }
    return tx;
}

// Producer + optimistic bridge in miniature: seal() builds, applies and
// commits a block of the given txs (all must be accepted); stage() commits a
// block without applying it, the way a bridge accepts anything well-formed.
struct TestChain {
    LedgerState state = LedgerState::genesis();
    DepositRegistry deposits;
    std::uint64_t k = 4;
    Digest tip = genesis_header_hash();
    std::uint64_t next_deposit = 1;

    std::vector<SideBlock> blocks;
    std::vector<LedgerState> pre_states;  // pre_states[i]: state before blocks[i]
    std::map<Digest, CommittedHeader> headers;
    std::map<Digest, SideBlock> bodies;
    ChainIndex index;

    TestChain() {
        headers[genesis_header_hash()] =
            CommittedHeader{genesis_header(), genesis_header_hash(), 0};
    }

    HeaderLookup lookup() const {
        return [this](const Digest& h) -> const CommittedHeader* {
            auto it = headers.find(h);
            return it == headers.end() ? nullptr : &it->second;
        };
    }

    std::uint64_t register_deposit(const std::string& recipient, std::uint64_t amount) {
        std::uint64_t id = next_deposit++;
        deposits[id] = DepositInfo{recipient, amount};
        return id;
    }

    static Transaction claim_tx(std::uint64_t id, const std::string& recipient,
                                std::uint64_t amount) {
        Transaction tx;
        tx.kind = Transaction::Kind::DepositClaim;
        tx.deposit_id = id;
        tx.amount = amount;
        tx.recipient = recipient;
        tx.outputs.push_back(Output{amount, Predicate::pay_to_key(recipient)});
        return tx;
    }

    Transaction mint(const std::string& recipient, std::uint64_t amount) {
        return claim_tx(register_deposit(recipient, amount), recipient, amount);
    }

    // All inputs assumed PayToKey(owner); claims are left empty for the
    // producer to attach (signatures do not cover them).
    static Transaction transfer(const std::string& owner, const std::vector<Outpoint>& ins,
                                std::vector<Output> outs) {
        Transaction tx;
        tx.kind = Transaction::Kind::Transfer;
        for (const auto& op : ins) tx.inputs.push_back(Input{op, {}, {}});
        tx.outputs = std::move(outs);
        Digest sh = tx_sign_hash(tx);
        for (auto& in : tx.inputs) in.witness = make_pay_witness(owner, sh);
        return tx;
    }

    static Transaction burn_tx(const std::string& owner, const std::vector<Outpoint>& ins,
                               std::uint64_t amount, const std::string& parent_recipient,
                               std::vector<Output> change = {}) {
        Transaction tx;
        tx.kind = Transaction::Kind::Burn;
        tx.amount = amount;
        tx.parent_recipient = parent_recipient;
        for (const auto& op : ins) tx.inputs.push_back(Input{op, {}, {}});
        tx.outputs.push_back(Output{amount, Predicate::burn(parent_recipient)});
        for (auto& o : change) tx.outputs.push_back(std::move(o));
        Digest sh = tx_sign_hash(tx);
        for (auto& in : tx.inputs) in.witness = make_pay_witness(owner, sh);
        return tx;
    }

    SideBlock build_only(const std::vector<Transaction>& txs,
                         const std::string& producer = "prod", std::uint64_t bond = 100) const {
        SideBlock b = build_block(txs, state, deposits, producer, bond, k, tip);
        REQUIRE(b.txs.size() == txs.size());  // nothing silently dropped
        return b;
    }

    // Optimistic acceptance: record commitments, no execution.
    void stage(const SideBlock& b) {
        Digest h = header_hash(b.header);
        headers[h] = CommittedHeader{b.header, h, b.txs.size()};
        bodies[h] = b;
    }

    SideBlock seal(const std::vector<Transaction>& txs, const std::string& producer = "prod",
                   std::uint64_t bond = 100) {
        SideBlock b = build_only(txs, producer, bond);
        ApplyResult res = apply_block(state, b, deposits, k);
        REQUIRE(res.ok());
        stage(b);
        index.index_block(b, header_hash(b.header));
        pre_states.push_back(state);
        state = std::move(res.state);
        blocks.push_back(b);
        tip = header_hash(b.header);
        return b;
    }

    // Outpoint of output `out` of tx `txi` in block `blk` (default: last block).
    Outpoint op(std::size_t txi, std::uint32_t out = 0, std::size_t blk = SIZE_MAX) const {
        const SideBlock& b = blocks[blk == SIZE_MAX ? blocks.size() - 1 : blk];
        return Outpoint{tx_id(b.txs[txi]), out};
    }
};

}  // namespace testutil
