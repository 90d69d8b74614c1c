#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rollsim/faults.hpp"
#include "rollsim/fraud.hpp"

#include "test_util.hpp"

using namespace rollsim;
using namespace testutil;

namespace {

// A chain with enough history to stage any fault: funded users, one past
// transfer (re-spendable for double-spend staging), and a six-tx honest
// follow-up block (two segments at k=4) waiting to be corrupted.
struct Staging {
    TestChain chain;
    Transaction respendable;  // committed transfer from block 2, claims attached
    SideBlock honest;         // unstaged honest block 3
};

Staging make_staging() {
    Staging s;
    s.chain.seal({s.chain.mint("alice", 100), s.chain.mint("bob", 60)});
    Outpoint alice_coin = s.chain.op(0, 0, 0);
    s.chain.seal({TestChain::transfer("alice", {alice_coin},
                                      {Output{30, Predicate::pay_to_key("bob")},
                                       Output{70, Predicate::pay_to_key("alice")}})});
    s.respendable = s.chain.blocks.back().txs[0];

    Outpoint bob_coin = s.chain.op(0, 0, 1);
    std::vector<Transaction> txs = {TestChain::transfer(
        "bob", {bob_coin}, {Output{30, Predicate::pay_to_key("carol")}})};
    for (int i = 0; i < 5; ++i) txs.push_back(s.chain.mint("dave", 10 + i));
    s.honest = s.chain.build_only(txs);
    return s;
}

SideBlock stage(Staging& s, FaultKind kind) {
    FaultContext ctx;
    ctx.beneficiary = "mallory";
    ctx.respendable = s.respendable;
    ctx.nonce = 7;
    auto bad = inject_fault(kind, s.honest, s.chain.state, s.chain.k, ctx);
    REQUIRE(bad);
    s.chain.stage(*bad);
    return *bad;
}

// Honest scheme-A material for a *valid* committed block: correct roots,
// correct witnesses, honest replay. Verifying it must come back NotFraud.
FraudProofA honest_proof_a(const TestChain& chain, std::size_t blk, std::uint32_t seg) {
    const SideBlock& block = chain.blocks[blk];
    const LedgerState& parent = chain.pre_states[blk];
    std::uint64_t k = chain.k;
    std::uint64_t lo = seg * k;
    std::uint64_t hi = std::min<std::uint64_t>(lo + k, block.txs.size());
    LedgerState pre = replay_prefix(parent, block, chain.deposits, lo);

    FraudProofA p;
    p.accused_header_hash = header_hash(block.header);
    p.segment_index = seg;
    p.pre_root = pre.smt.root_hash();
    p.expected_post_root = block.header.intermediate_roots[seg];

    auto leaves = block_tx_leaves(block);
    std::vector<Digest> leaf_hashes;
    for (const auto& l : leaves) leaf_hashes.push_back(hash_leaf(l));
    for (std::uint64_t j = lo; j < hi; ++j)
        p.txs.emplace_back(leaves[j], merkle_prove_hashed(leaf_hashes, j));

    std::set<Digest> seen;
    for (std::uint64_t j = lo; j < hi; ++j) {
        const Transaction& tx = block.txs[j];
        Digest txid = tx_id(tx);
        auto add = [&](const Outpoint& op) {
            if (!seen.insert(utxo_key(op)).second) return;
            SmtWitnessEntry e;
            e.outpoint = op;
            e.proof = pre.smt.prove(utxo_key(op));
            if (e.present()) {
                e.output = pre.utxo.at(op).output;
                e.created_height = pre.utxo.at(op).created_height;
            }
            p.witnesses.push_back(std::move(e));
        };
        for (const auto& in : tx.inputs) add(in.outpoint);
        for (std::uint32_t oi = 0; oi < tx.outputs.size(); ++oi) add(Outpoint{txid, oi});
        if (tx.kind == Transaction::Kind::DepositClaim &&
            seen.insert(deposit_key(tx.deposit_id)).second) {
            SmtWitnessEntry e;
            e.kind = SmtWitnessEntry::Kind::Deposit;
            e.deposit_id = tx.deposit_id;
            e.proof = pre.smt.prove(deposit_key(tx.deposit_id));
            p.witnesses.push_back(std::move(e));
        }
    }
    return p;
}

}  // namespace

TEST_CASE("scheme A refutes every staged fault kind", "[fraud]") {
    const FaultKind kinds[] = {
        FaultKind::ValueImbalance,   FaultKind::FalseClaim,
        FaultKind::DoubleSpend,      FaultKind::DoubleSpendWithinTx,
        FaultKind::MissingOutpoint,  FaultKind::BadStateRoot,
        FaultKind::BadIntermediateRoot, FaultKind::UnauthorizedDeposit,
    };
    for (FaultKind kind : kinds) {
        INFO("fault: " << to_string(kind));
        Staging s = make_staging();
        SideBlock bad = stage(s, kind);
        Digest bad_hash = header_hash(bad.header);

        REQUIRE(!apply_block(s.chain.state, bad, s.chain.deposits, s.chain.k).ok());

        auto proof = generate_proof_a(s.chain.state, bad, s.chain.deposits, s.chain.k);
        REQUIRE(proof);
        FraudVerdict v =
            verify_fraud_proof_a(s.chain.lookup(), s.chain.deposits, s.chain.k, *proof);
        INFO("detail: " << v.detail);
        REQUIRE(v.outcome == FraudVerdict::Outcome::Fraud);
        REQUIRE(v.accused == bad_hash);

        // survives the wire
        FraudProof wire = decode_fraud_proof(encode_fraud_proof(*proof));
        FraudVerdict v2 =
            verify_fraud_proof(s.chain.lookup(), s.chain.deposits, s.chain.k, wire);
        REQUIRE(v2.outcome == FraudVerdict::Outcome::Fraud);
        REQUIRE(v2.accused == bad_hash);
    }
}

TEST_CASE("scheme B refutes spend metadata faults and declines the rest", "[fraud]") {
    struct Case {
        FaultKind kind;
        FraudProofB::Variant expect;
    };
    const Case covered[] = {
        {FaultKind::FalseClaim, FraudProofB::Variant::OutputMismatch},
        {FaultKind::DoubleSpend, FraudProofB::Variant::PriorSpend},
        {FaultKind::DoubleSpendWithinTx, FraudProofB::Variant::PriorSpend},
        {FaultKind::MissingOutpoint, FraudProofB::Variant::NoSuchOutput},
    };
    for (const Case& c : covered) {
        INFO("fault: " << to_string(c.kind));
        Staging s = make_staging();
        SideBlock bad = stage(s, c.kind);
        Digest bad_hash = header_hash(bad.header);

        auto proof = generate_proof_b(s.chain.index, s.chain.bodies, s.chain.state, bad,
                                      s.chain.deposits, s.chain.k);
        REQUIRE(proof);
        REQUIRE(proof->variant == c.expect);
        FraudVerdict v = verify_fraud_proof_b(s.chain.lookup(), *proof);
        INFO("detail: " << v.detail);
        REQUIRE(v.outcome == FraudVerdict::Outcome::Fraud);
        REQUIRE(v.accused == bad_hash);

        // both schemes convict the same header (agreement)
        auto pa = generate_proof_a(s.chain.state, bad, s.chain.deposits, s.chain.k);
        REQUIRE(pa);
        FraudVerdict va =
            verify_fraud_proof_a(s.chain.lookup(), s.chain.deposits, s.chain.k, *pa);
        REQUIRE(va.outcome == FraudVerdict::Outcome::Fraud);
        REQUIRE(va.accused == v.accused);

        FraudProof wire = decode_fraud_proof(encode_fraud_proof(*proof));
        REQUIRE(verify_fraud_proof(s.chain.lookup(), s.chain.deposits, s.chain.k, wire)
                    .outcome == FraudVerdict::Outcome::Fraud);
    }

    const FaultKind uncovered[] = {FaultKind::ValueImbalance, FaultKind::BadStateRoot,
                                   FaultKind::BadIntermediateRoot,
                                   FaultKind::UnauthorizedDeposit};
    for (FaultKind kind : uncovered) {
        INFO("fault: " << to_string(kind));
        Staging s = make_staging();
        SideBlock bad = stage(s, kind);
        REQUIRE(!generate_proof_b(s.chain.index, s.chain.bodies, s.chain.state, bad,
                                  s.chain.deposits, s.chain.k));
    }
}

TEST_CASE("valid blocks cannot be convicted", "[fraud]") {
    Staging s = make_staging();
    // commit the honest block for real
    ApplyResult res = apply_block(s.chain.state, s.honest, s.chain.deposits, s.chain.k);
    REQUIRE(res.ok());
    s.chain.stage(s.honest);
    s.chain.index.index_block(s.honest, header_hash(s.honest.header));
    s.chain.pre_states.push_back(s.chain.state);
    s.chain.blocks.push_back(s.honest);
    s.chain.state = std::move(res.state);
    s.chain.tip = header_hash(s.honest.header);

    SECTION("generators find nothing to prove") {
        REQUIRE(!generate_proof_a(s.chain.pre_states.back(), s.honest, s.chain.deposits,
                                  s.chain.k));
        REQUIRE(!generate_proof_b(s.chain.index, s.chain.bodies, s.chain.pre_states.back(),
                                  s.honest, s.chain.deposits, s.chain.k));
    }
    SECTION("an honest accusation replays cleanly: NotFraud") {
        for (std::uint32_t seg : {0u, 1u}) {
            FraudProofA p = honest_proof_a(s.chain, 2, seg);
            FraudVerdict v =
                verify_fraud_proof_a(s.chain.lookup(), s.chain.deposits, s.chain.k, p);
            INFO("segment " << seg << ": " << v.detail);
            REQUIRE(v.outcome == FraudVerdict::Outcome::NotFraud);
        }
    }
    SECTION("citing the true creating tx refutes nothing: DoesNotApply") {
        // block 3 tx 0 spends bob's coin created by block 2 tx 0
        auto leaves3 = block_tx_leaves(s.chain.blocks[2]);
        auto leaves2 = block_tx_leaves(s.chain.blocks[1]);
        FraudProofB p;
        p.accused_header_hash = header_hash(s.chain.blocks[2].header);
        p.accused_tx = leaves3[0];
        p.accused_inclusion = merkle_prove(leaves3, 0);
        p.input_index = 0;
        p.variant = FraudProofB::Variant::OutputMismatch;
        p.ref_header_hash = header_hash(s.chain.blocks[1].header);
        p.ref_tx = leaves2[0];
        p.ref_inclusion = merkle_prove(leaves2, 0);
        FraudVerdict v = verify_fraud_proof_b(s.chain.lookup(), p);
        INFO(v.detail);
        REQUIRE(v.outcome == FraudVerdict::Outcome::DoesNotApply);

        // a spend is not "prior" to itself
        p.variant = FraudProofB::Variant::PriorSpend;
        p.ref_header_hash = p.accused_header_hash;
        p.ref_tx = p.accused_tx;
        p.ref_inclusion = p.accused_inclusion;
        p.prior_input_index = 0;
        v = verify_fraud_proof_b(s.chain.lookup(), p);
        REQUIRE(v.outcome == FraudVerdict::Outcome::DoesNotApply);
    }
}

TEST_CASE("broken proofs are malformed, not fraud", "[fraud]") {
    Staging s = make_staging();
    SideBlock bad = stage(s, FaultKind::ValueImbalance);
    auto proof = generate_proof_a(s.chain.state, bad, s.chain.deposits, s.chain.k);
    REQUIRE(proof);
    auto verdict = [&](const FraudProofA& p) {
        return verify_fraud_proof_a(s.chain.lookup(), s.chain.deposits, s.chain.k, p).outcome;
    };

    SECTION("unknown accused header") {
        FraudProofA p = *proof;
        p.accused_header_hash.bytes[3] ^= 1;
        REQUIRE(verdict(p) == FraudVerdict::Outcome::UnknownHeader);
    }
    SECTION("segment out of range") {
        FraudProofA p = *proof;
        p.segment_index = 9;
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("pre/post roots must match the commitment") {
        FraudProofA p = *proof;
        p.pre_root.bytes[0] ^= 1;
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
        p = *proof;
        p.expected_post_root.bytes[0] ^= 1;
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("missing or surplus segment txs") {
        FraudProofA p = *proof;
        p.txs.pop_back();
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
        p = *proof;
        p.txs.push_back(p.txs.back());
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("txs must sit at their committed positions") {
        FraudProofA p = *proof;
        REQUIRE(p.txs.size() >= 2);
        std::swap(p.txs[0], p.txs[1]);
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("dropped witness") {
        FraudProofA p = *proof;
        REQUIRE(!p.witnesses.empty());
        p.witnesses.erase(p.witnesses.begin());
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("tampered witness preimage") {
        FraudProofA p = *proof;
        bool tampered = false;
        for (auto& e : p.witnesses)
            if (e.present() && e.kind == SmtWitnessEntry::Kind::Utxo) {
                e.output.value += 1;
                tampered = true;
                break;
            }
        REQUIRE(tampered);
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }
    SECTION("witness proof against a different root") {
        FraudProofA p = *proof;
        REQUIRE(!p.witnesses.empty());
        REQUIRE(!p.witnesses[0].proof.siblings.empty());
        p.witnesses[0].proof.siblings[0].bytes[7] ^= 1;
        REQUIRE(verdict(p) == FraudVerdict::Outcome::Malformed);
    }

    SECTION("scheme B variants") {
        Staging s2 = make_staging();
        SideBlock bad2 = stage(s2, FaultKind::MissingOutpoint);
        auto pb = generate_proof_b(s2.chain.index, s2.chain.bodies, s2.chain.state, bad2,
                                   s2.chain.deposits, s2.chain.k);
        REQUIRE(pb);
        auto vb = [&](const FraudProofB& p) {
            return verify_fraud_proof_b(s2.chain.lookup(), p).outcome;
        };
        FraudProofB p = *pb;
        p.input_index = 40;
        REQUIRE(vb(p) == FraudVerdict::Outcome::Malformed);
        p = *pb;
        p.accused_inclusion.tree_size += 1;
        REQUIRE(vb(p) == FraudVerdict::Outcome::Malformed);
        p = *pb;
        p.absence.key.bytes[0] ^= 1;
        REQUIRE(vb(p) == FraudVerdict::Outcome::Malformed);
        p = *pb;
        p.accused_header_hash.bytes[0] ^= 1;
        REQUIRE(vb(p) == FraudVerdict::Outcome::UnknownHeader);
    }
}

TEST_CASE("forged proofs never convict a valid chain", "[fraud][forge]") {
    std::mt19937_64 rng(99173);

    // an all-honest chain with transfers, claims and multiple segments
    TestChain chain;
    chain.seal({chain.mint("alice", 100), chain.mint("bob", 60), chain.mint("carol", 40)});
    for (int b = 0; b < 3; ++b) {
        Outpoint alice_coin{};
        for (const auto& [op, rec] : chain.state.utxo)
            if (rec.output.predicate == Predicate::pay_to_key("alice")) alice_coin = op;
        std::uint64_t v = chain.state.utxo.at(alice_coin).output.value;
        REQUIRE(v > 10);
        std::vector<Transaction> txs = {TestChain::transfer(
            "alice", {alice_coin},
            {Output{v - 10, Predicate::pay_to_key("alice")},
             Output{10, Predicate::pay_to_key("bob")}})};
        while (txs.size() < 6) txs.push_back(chain.mint("erin", 5 + txs.size()));
        chain.seal(txs);
    }
    HeaderLookup look = chain.lookup();

    auto assert_not_fraud = [&](const FraudVerdict& v) {
        if (v.outcome == FraudVerdict::Outcome::Fraud) {
            INFO("forged proof convicted a valid block: " << v.detail);
            REQUIRE(v.outcome != FraudVerdict::Outcome::Fraud);
        }
    };

    // honest base material to corrupt
    std::vector<Bytes> honest_enc;
    for (std::size_t b = 1; b < chain.blocks.size(); ++b)
        for (std::uint32_t seg = 0;
             seg < segment_count(chain.blocks[b].txs.size(), chain.k); ++seg)
            honest_enc.push_back(encode_fraud_proof(honest_proof_a(chain, b, seg)));

    int decoded_ok = 0;
    for (int trial = 0; trial < 1500; ++trial) {
        std::uint64_t strat = rng() % 100;
        if (strat < 40) {
            // single-byte corruption of an honest proof
            Bytes enc = honest_enc[rng() % honest_enc.size()];
            enc[rng() % enc.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
            try {
                FraudProof p = decode_fraud_proof(enc);
                ++decoded_ok;
                assert_not_fraud(verify_fraud_proof(look, chain.deposits, chain.k, p));
            } catch (const DecodeError&) {
            }
        } else if (strat < 70) {
            // random scheme A anchored at real headers
            FraudProofA p;
            const SideBlock& blk = chain.blocks[rng() % chain.blocks.size()];
            p.accused_header_hash =
                rng() % 8 ? header_hash(blk.header) : random_digest(rng);
            p.segment_index = static_cast<std::uint32_t>(rng() % 3);
            p.pre_root = rng() % 2 ? chain.pre_states[0].smt.root_hash() : random_digest(rng);
            p.expected_post_root = rng() % 2 && !blk.header.intermediate_roots.empty()
                                       ? blk.header.intermediate_roots[0]
                                       : random_digest(rng);
            std::size_t ntx = rng() % 5;
            auto leaves = block_tx_leaves(blk);
            for (std::size_t i = 0; i < ntx; ++i) {
                if (!leaves.empty() && rng() % 2) {
                    std::uint64_t idx = rng() % leaves.size();
                    p.txs.emplace_back(leaves[idx], merkle_prove(leaves, idx));
                } else {
                    Transaction tx = random_tx(rng);
                    tx.bundle.reset();
                    MerkleProof mp;
                    mp.tree_size = 1 + rng() % 8;
                    mp.leaf_index = rng() % mp.tree_size;
                    for (std::size_t sib = 0; sib < rng() % 4; ++sib)
                        mp.siblings.push_back(random_digest(rng));
                    p.txs.emplace_back(encode_tx_canonical(tx), mp);
                }
            }
            std::size_t nw = rng() % 6;
            for (std::size_t i = 0; i < nw; ++i) {
                SmtWitnessEntry e;
                e.outpoint = Outpoint{random_digest(rng), 0};
                if (rng() % 2 && !chain.state.utxo.empty()) {
                    auto it = chain.state.utxo.begin();
                    std::advance(it, rng() % chain.state.utxo.size());
                    e.outpoint = it->first;
                    e.output = it->second.output;
                    e.created_height = it->second.created_height;
                }
                e.proof = rng() % 2 ? chain.state.smt.prove(utxo_key(e.outpoint))
                                    : random_smt_proof(rng);
                e.proof.key = utxo_key(e.outpoint);
                p.witnesses.push_back(std::move(e));
            }
            assert_not_fraud(
                verify_fraud_proof_a(look, chain.deposits, chain.k, p));
        } else {
            // random scheme B against real txs
            std::size_t bi = 1 + rng() % (chain.blocks.size() - 1);
            const SideBlock& blk = chain.blocks[bi];
            auto leaves = block_tx_leaves(blk);
            FraudProofB p;
            p.accused_header_hash =
                rng() % 8 ? header_hash(blk.header) : random_digest(rng);
            std::uint64_t idx = rng() % leaves.size();
            p.accused_tx = leaves[idx];
            p.accused_inclusion = merkle_prove(leaves, idx);
            p.input_index = static_cast<std::uint32_t>(rng() % 2);
            switch (rng() % 3) {
                case 0: {
                    p.variant = FraudProofB::Variant::OutputMismatch;
                    const SideBlock& ref = chain.blocks[rng() % chain.blocks.size()];
                    auto rl = block_tx_leaves(ref);
                    if (rl.empty()) continue;
                    std::uint64_t ri = rng() % rl.size();
                    p.ref_header_hash = header_hash(ref.header);
                    p.ref_tx = rl[ri];
                    p.ref_inclusion = merkle_prove(rl, ri);
                    break;
                }
                case 1: {
                    p.variant = FraudProofB::Variant::PriorSpend;
                    const SideBlock& ref = chain.blocks[rng() % chain.blocks.size()];
                    auto rl = block_tx_leaves(ref);
                    if (rl.empty()) continue;
                    std::uint64_t ri = rng() % rl.size();
                    p.ref_header_hash = header_hash(ref.header);
                    p.ref_tx = rl[ri];
                    p.ref_inclusion = merkle_prove(rl, ri);
                    p.prior_input_index = static_cast<std::uint32_t>(rng() % 2);
                    break;
                }
                case 2: {
                    p.variant = FraudProofB::Variant::NoSuchOutput;
                    if (rng() % 2) {
                        // strongest attempt: the real spent key proven from the
                        // real parent state — it is a membership proof, and
                        // stripping its value hash breaks the fold
                        Transaction acc = decode_tx_canonical(p.accused_tx);
                        if (acc.inputs.empty()) continue;
                        Digest key = utxo_key(acc.inputs[0].outpoint);
                        p.input_index = 0;
                        p.absence = chain.pre_states[bi].smt.prove(key);
                        if (rng() % 2) p.absence.value_hash.reset();
                    } else {
                        Digest key = rng() % 2 ? utxo_key(Outpoint{random_digest(rng), 0})
                                               : random_digest(rng);
                        const LedgerState& st =
                            chain.pre_states[rng() % chain.pre_states.size()];
                        p.absence = rng() % 2 ? st.smt.prove(key) : random_smt_proof(rng);
                        if (rng() % 4 == 0) p.absence.value_hash.reset();
                    }
                    break;
                }
            }
            assert_not_fraud(verify_fraud_proof_b(look, p));
        }
    }
    REQUIRE(decoded_ok > 100);  // corruption strategy actually exercised verification
}

TEST_CASE("proofs stay small relative to the block they refute", "[fraud]") {
    TestChain chain;
    std::vector<Transaction> mints;
    for (int i = 0; i < 32; ++i) mints.push_back(chain.mint("alice", 50 + i));
    chain.seal(mints);

    // a wide block: 128 txs across 32 segments
    std::vector<Transaction> txs;
    for (int i = 0; i < 32; ++i)
        txs.push_back(TestChain::transfer("alice", {chain.op(i, 0, 0)},
                                          {Output{50 + static_cast<std::uint64_t>(i), Predicate::pay_to_key("bob")}}));
    for (int i = 0; i < 96; ++i) txs.push_back(chain.mint("carol", 10 + static_cast<std::uint64_t>(i % 7)));
    SideBlock honest = chain.build_only(txs);

    FaultContext ctx;
    ctx.beneficiary = "mallory";
    auto bad = inject_fault(FaultKind::BadStateRoot, honest, chain.state, chain.k, ctx);
    REQUIRE(bad);
    chain.stage(*bad);

    auto pa = generate_proof_a(chain.state, *bad, chain.deposits, chain.k);
    REQUIRE(pa);
    REQUIRE(verify_fraud_proof_a(chain.lookup(), chain.deposits, chain.k, *pa).is_fraud());
    std::size_t block_size = encode_block(*bad).size();
    std::size_t proof_size = encode_fraud_proof(*pa).size();
    INFO("block " << block_size << "B, scheme A proof " << proof_size << "B");
    REQUIRE(proof_size * 2 < block_size);  // one segment, not the whole block

    // scheme B on a metadata fault in the same chain shape
    auto bad2 = inject_fault(FaultKind::MissingOutpoint, honest, chain.state, chain.k, ctx);
    REQUIRE(bad2);
    chain.stage(*bad2);
    auto pb = generate_proof_b(chain.index, chain.bodies, chain.state, *bad2, chain.deposits,
                               chain.k);
    REQUIRE(pb);
    REQUIRE(verify_fraud_proof_b(chain.lookup(), *pb).is_fraud());
    std::size_t b_size = encode_fraud_proof(*pb).size();
    INFO("scheme B proof " << b_size << "B");
    REQUIRE(b_size < 4096);
    REQUIRE(b_size * 8 < block_size);
}
