#pragma once

// Scenario harness. Wires miners (parent-chain replicas), block producers,
// fraud watchers and user traffic into one closed world, streams everything
// observable as JSONL, and grades the liveness/safety checks the scenario
// declares.
//
// Determinism contract: a run is a pure function of (scenario, seed). The
// event log is byte-reproducible, and verify_log both re-runs the scenario
// (byte comparison) and replays the logged chain with no actors at all,
// regrading every check from the replayed state.

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rollsim/block.hpp"
#include "rollsim/bridge.hpp"
#include "rollsim/consensus.hpp"
#include "rollsim/da.hpp"
#include "rollsim/eventlog.hpp"
#include "rollsim/fraud.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/parent.hpp"
#include "rollsim/rng.hpp"
#include "rollsim/scenario.hpp"
#include "rollsim/tx.hpp"

namespace rollsim {

inline std::string_view to_string(CallKind k) {
    switch (k) {
        case CallKind::SubmitBlock: return "submit_block";
        case CallKind::Deposit: return "deposit";
        case CallKind::SubmitFraudProof: return "fraud_proof";
        case CallKind::Finalize: return "finalize";
        case CallKind::Withdraw: return "withdraw";
    }
    return "?";
}

// ---- monitors ----

// Finality must be monotone per observer: once a node's canonical bridge
// state shows a header Finalized, every later canonical state it adopts
// must still show it Finalized. A parent-chain reorg past finalization is
// exactly what this catches.
struct SafetyMonitor {
    std::map<std::string, std::set<Digest>> finalized_seen;
    std::set<std::pair<std::string, Digest>> reverted;
    std::vector<std::string> violations;

    void observe(const std::string& node_id, const BridgeState& st) {
        std::set<Digest> now;
        for (const auto& [h, rec] : st.headers)
            if (rec.status == HeaderStatus::Finalized) now.insert(h);
        std::set<Digest>& seen = finalized_seen[node_id];
        for (const Digest& h : seen)
            if (!now.contains(h) && reverted.emplace(node_id, h).second)
                violations.push_back("node " + node_id + ": finalized header " + to_hex(h) +
                                     " reverted");
        seen.insert(now.begin(), now.end());
    }
};

// Value conservation, audited on every canonical-state change of every
// node: registered-but-unclaimed deposits plus circulating side value plus
// committed burns must equal everything ever deposited, withdrawals may
// never exceed burns, and bond accounting must balance. Headers that
// finalize beyond the node's validated prefix make the ledger unauditable
// and are themselves a violation.
struct PegMonitor {
    std::vector<std::string> violations;
    std::set<std::string> seen;
    bool invalid_finalization = false;

    void note(std::string msg) {
        if (seen.insert(msg).second) violations.push_back(std::move(msg));
    }

    void audit(const std::string& node_id, const NodeState& node) {
        const BridgeState& st = node.bridge;
        const ChainTracker& t = node.tracker;
        auto at = [&](const std::string& what) {
            return "node " + node_id + " at parent height " +
                   std::to_string(node.view.tip_height) + ": " + what;
        };
        if (!bond_accounting_consistent(st))
            note(at("bond accounting broken: escrowed " + std::to_string(st.bonds_escrowed) +
                    " + released " + std::to_string(st.bonds_released) + " + rewards " +
                    std::to_string(st.rewards_paid) + " + burned " +
                    std::to_string(st.bonds_burned) + " != submitted " +
                    std::to_string(st.bonds_submitted)));

        for (std::size_t i = t.valid_len; i < t.spine.size(); ++i) {
            const HeaderRecord* rec = st.find(t.spine[i]);
            if (rec != nullptr && rec->status == HeaderStatus::Finalized) {
                invalid_finalization = true;
                note(at("header " + to_hex(t.spine[i]) +
                        " finalized beyond the validated prefix"));
                return;  // value past the prefix cannot be accounted
            }
        }

        const LedgerState& s = t.prefix_state;
        std::uint64_t unclaimed = 0;
        for (const auto& [id, info] : st.deposits)
            if (!s.claimed_deposits.contains(id)) unclaimed += info.amount;
        if (unclaimed + s.circulating + s.pending_burns != st.total_deposited)
            note(at("value not conserved: unclaimed " + std::to_string(unclaimed) +
                    " + circulating " + std::to_string(s.circulating) + " + burns " +
                    std::to_string(s.pending_burns) + " != deposited " +
                    std::to_string(st.total_deposited)));
        if (st.total_withdrawn > s.pending_burns)
            note(at("withdrawn " + std::to_string(st.total_withdrawn) + " exceeds burned " +
                    std::to_string(s.pending_burns)));
    }
};

// ---- pure call fold ----

// Uncached replay of every bridge call on the path to `at`, keeping each
// call's result. This is both the convergence oracle (it must agree with
// the memoized fold bitwise) and the source for per-call checks.
struct FoldStep {
    std::uint64_t parent_height = 0;
    Digest parent_prev;  // seeds the leader draw for this block's calls
    BridgeCall call;
    CallResult result;
};

struct FoldTrace {
    BridgeState state;
    std::vector<FoldStep> steps;

    explicit FoldTrace(BridgeParams p) : state(std::move(p)) {}
};

inline FoldTrace trace_bridge_calls(const ForkView& view, const Digest& at) {
    std::vector<const ParentBlock*> path;
    for (const ParentBlock* b = view.find(at); b != nullptr && b->height > 0;
         b = view.find(b->prev))
        path.push_back(b);
    FoldTrace tr(view.params);
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        const ParentBlock* b = *it;
        for (const BridgeCall& c : b->calls) {
            CallResult res = exec_call(tr.state, c, b->height, b->prev);
            tr.steps.push_back(FoldStep{b->height, b->prev, c, std::move(res)});
        }
    }
    return tr;
}

// ---- data-availability sessions ----

struct DaResult {
    std::uint32_t n = 0, k = 0, samples = 0, hidden = 0;
    std::uint64_t trials = 0, detected = 0;
    double frequency = 0.0;
    double oracle = 0.0;
    double tolerance = 0.0;
    bool within = false;         // |frequency - oracle| <= tolerance
    bool reconstructed = false;  // revealed chunks decode (or correctly refuse)
    std::size_t payload_size = 0;
};

// The payload published for sampling: the newest committed non-empty block
// body, falling back to the genesis header for traffic-free scenarios.
inline Bytes select_da_payload(const ChainTracker& t) {
    for (std::size_t i = t.valid_len; i-- > 0;) {
        auto it = t.bodies.find(t.spine[i]);
        if (it != t.bodies.end() && !it->second.txs.empty()) return encode_block(it->second);
    }
    return encode_header(genesis_header());
}

inline DaResult run_da_trials(const ScenarioDa& cfg, const Bytes& payload, std::uint64_t seed) {
    DaResult r;
    r.n = cfg.n;
    r.k = cfg.k;
    r.samples = cfg.samples;
    r.hidden = cfg.hidden;
    r.trials = cfg.trials;
    r.tolerance = cfg.tolerance;
    r.payload_size = payload.size();

    DaEncoding enc = da_encode(payload, cfg.n, cfg.k);
    SplitMix64 hide_rng = substream(seed, "da-hide");
    std::set<std::uint32_t> hidden;
    for (std::uint32_t i : sample_without_replacement(hide_rng, cfg.n, cfg.hidden))
        hidden.insert(i);

    std::map<std::uint32_t, Bytes> revealed;
    for (std::uint32_t i = 0; i < enc.n; ++i)
        if (!hidden.contains(i)) revealed.emplace(i, enc.chunks[i]);
    std::optional<Bytes> dec = da_decode(enc.n, enc.k, revealed);
    r.reconstructed = revealed.size() >= cfg.k ? (dec.has_value() && *dec == payload)
                                               : !dec.has_value();

    SplitMix64 rng = substream(seed, "da-sample");
    for (std::uint64_t i = 0; i < cfg.trials; ++i)
        if (da_sample_hits(da_sample(rng, cfg.n, cfg.samples), hidden)) ++r.detected;
    r.frequency =
        cfg.trials == 0 ? 0.0 : static_cast<double>(r.detected) / static_cast<double>(cfg.trials);
    r.oracle = da_detection_probability(cfg.n, cfg.hidden, cfg.samples);
    r.within = std::abs(r.frequency - r.oracle) <= cfg.tolerance;
    return r;
}

inline Json da_event_json(const DaResult& r) {
    return Json{{"ev", "da"},
                {"n", r.n},
                {"k", r.k},
                {"samples", r.samples},
                {"hidden", r.hidden},
                {"trials", r.trials},
                {"detected", r.detected},
                {"frequency", r.frequency},
                {"oracle", r.oracle},
                {"tolerance", r.tolerance},
                {"within_tolerance", r.within},
                {"reconstructed", r.reconstructed},
                {"payload_size", r.payload_size}};
}

// ---- checks ----

struct CheckOutcome {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct CheckReport {
    std::vector<CheckOutcome> checks;
    std::uint64_t fraud_proofs_accepted = 0;
    bool matches_expectation = true;
    std::string mismatch;  // first discrepancy against [expect], empty when none

    const CheckOutcome* find(const std::string& name) const {
        for (const CheckOutcome& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

namespace harness_detail {

struct TraceFacts {
    std::uint64_t proofs_accepted = 0;
    std::uint64_t rewards = 0;
    std::uint64_t burned = 0;
    bool split_ok = true;        // every pot split reward = pot/2, rest burned
    std::string split_why;
    bool found_proof = false;
    std::string first_scheme;    // "segment_replay" | "citation"
    std::string first_variant;   // citation flavor, empty for scheme A
    std::uint64_t withdraw_count = 0;
    std::uint64_t withdraw_sum = 0;
    bool leader_ok = true;
    std::string leader_why;
    std::uint64_t blocks_accepted = 0;
    bool halted_height_accepted = false;
};

inline const char* variant_name(FraudProofB::Variant v) {
    switch (v) {
        case FraudProofB::Variant::OutputMismatch: return "output_mismatch";
        case FraudProofB::Variant::PriorSpend: return "prior_spend";
        case FraudProofB::Variant::NoSuchOutput: return "no_such_output";
    }
    return "?";
}

inline TraceFacts gather_trace_facts(const FoldTrace& trace, const BridgeParams& params) {
    TraceFacts f;
    for (const FoldStep& step : trace.steps) {
        if (!step.result.accepted) continue;
        switch (step.call.kind) {
            case CallKind::SubmitBlock: {
                ++f.blocks_accepted;
                for (const BridgeEvent& ev : step.result.events) {
                    if (ev.kind != BridgeEventKind::BlockSubmitted) continue;
                    if (params.halt_height != 0 && ev.aux >= params.halt_height)
                        f.halted_height_accepted = true;
                    if (params.leader_mode == LeaderMode::StakedShuffle) {
                        auto leader =
                            staked_shuffle_leader(params.stakers, step.parent_prev, ev.aux);
                        if (!leader.has_value() || *leader != ev.actor) {
                            f.leader_ok = false;
                            f.leader_why = "height " + std::to_string(ev.aux) + " produced by " +
                                           ev.actor + ", leader draw says " +
                                           (leader ? *leader : std::string("<none>"));
                        }
                    }
                }
                break;
            }
            case CallKind::SubmitFraudProof: {
                ++f.proofs_accepted;
                std::uint64_t pot = 0, reward = 0, burn = 0;
                for (const BridgeEvent& ev : step.result.events) {
                    if (ev.kind == BridgeEventKind::BlockOrphaned) pot += ev.amount;
                    if (ev.kind == BridgeEventKind::FraudProven) {
                        reward = ev.amount;
                        burn = ev.aux;
                    }
                }
                if (reward != pot / 2 || burn != pot - pot / 2) {
                    f.split_ok = false;
                    f.split_why = "pot " + std::to_string(pot) + " split into reward " +
                                  std::to_string(reward) + " + burn " + std::to_string(burn) +
                                  " at parent height " + std::to_string(step.parent_height);
                }
                f.rewards += reward;
                f.burned += burn;
                if (!f.found_proof) {
                    f.found_proof = true;
                    try {
                        FraudProof proof = decode_fraud_proof(step.call.payload);
                        if (std::holds_alternative<FraudProofA>(proof)) {
                            f.first_scheme = "segment_replay";
                        } else {
                            f.first_scheme = "citation";
                            f.first_variant = variant_name(std::get<FraudProofB>(proof).variant);
                        }
                    } catch (const DecodeError&) {
                        f.first_scheme = "<undecodable>";
                    }
                }
                break;
            }
            case CallKind::Withdraw: {
                for (const BridgeEvent& ev : step.result.events)
                    if (ev.kind == BridgeEventKind::WithdrawalPaid) {
                        ++f.withdraw_count;
                        f.withdraw_sum += ev.amount;
                    }
                break;
            }
            default: break;
        }
    }
    return f;
}

}  // namespace harness_detail

inline CheckReport compute_checks(const ScenarioConfig& cfg,
                                  std::map<std::string, NodeState>& nodes,
                                  const SafetyMonitor& safety, const PegMonitor& peg,
                                  const std::vector<Digest>& traffic_signs,
                                  const std::optional<DaResult>& da) {
    CheckReport rep;
    NodeState& canon = nodes.at(cfg.miners.front());
    const BridgeState& st = canon.bridge;
    const ChainTracker& t = canon.tracker;
    FoldTrace trace = trace_bridge_calls(canon.view, canon.view.tip);
    harness_detail::TraceFacts facts = harness_detail::gather_trace_facts(trace, st.params);
    rep.fraud_proofs_accepted = facts.proofs_accepted;

    auto add = [&rep](std::string name, bool ok, std::string detail) {
        rep.checks.push_back(CheckOutcome{std::move(name), ok, std::move(detail)});
    };

    {
        std::uint64_t committed = 0;
        for (const Digest& s : traffic_signs)
            if (t.committed_signs.contains(s)) ++committed;
        bool height_ok = st.tip_height >= cfg.expect.min_tip_height;
        bool traffic_ok = !cfg.expect.all_traffic_committed || committed == traffic_signs.size();
        add("liveness", height_ok && traffic_ok,
            "side tip " + std::to_string(st.tip_height) + " (want >= " +
                std::to_string(cfg.expect.min_tip_height) + "), " + std::to_string(committed) +
                "/" + std::to_string(traffic_signs.size()) + " traffic txs committed");
    }

    add("safety", safety.violations.empty(),
        safety.violations.empty() ? "no finalized header reverted on any node"
                                  : safety.violations.front());

    {
        bool bad = peg.invalid_finalization;
        for (std::size_t i = t.valid_len; i < t.spine.size(); ++i) {
            const HeaderRecord* rec = st.find(t.spine[i]);
            if (rec != nullptr && rec->status == HeaderStatus::Finalized) bad = true;
        }
        add("no_invalid_finalization", !bad,
            bad ? "a header finalized beyond the validated prefix"
                : "every finalized header lies on the validated prefix");
    }

    add("peg_conservation", peg.violations.empty(),
        peg.violations.empty() ? "conserved at every audit" : peg.violations.front());

    {
        bool ok = facts.split_ok && bond_accounting_consistent(st) &&
                  facts.rewards == st.rewards_paid && facts.burned == st.bonds_burned;
        std::string detail = std::to_string(facts.proofs_accepted) + " proofs, rewards " +
                             std::to_string(st.rewards_paid) + ", burned " +
                             std::to_string(st.bonds_burned);
        if (!facts.split_ok) detail = facts.split_why;
        add("fraud_economics", ok, detail);
    }

    {
        bool ok = true;
        std::string detail = "no expectation";
        if (cfg.expect.proof_scheme.has_value() || cfg.expect.proof_variant.has_value()) {
            if (!facts.found_proof) {
                ok = false;
                detail = "no fraud proof was accepted";
            } else {
                ok = (!cfg.expect.proof_scheme || facts.first_scheme == *cfg.expect.proof_scheme) &&
                     (!cfg.expect.proof_variant ||
                      facts.first_variant == *cfg.expect.proof_variant);
                detail = "first accepted proof: " + facts.first_scheme +
                         (facts.first_variant.empty() ? "" : " / " + facts.first_variant);
            }
        } else if (facts.found_proof) {
            detail = "first accepted proof: " + facts.first_scheme +
                     (facts.first_variant.empty() ? "" : " / " + facts.first_variant);
        }
        add("proof_scheme", ok, detail);
    }

    {
        bool ok = true;
        std::string why;
        Bytes canon_bytes = encode_bridge_state(st);
        for (auto& [id, node] : nodes) {
            if (node.view.tip != canon.view.tip) {
                ok = false;
                why = "node " + id + " parent tip differs";
                break;
            }
            if (encode_bridge_state(node.bridge) != canon_bytes) {
                ok = false;
                why = "node " + id + " bridge state differs bitwise";
                break;
            }
            BridgeState pure = bridge_state_of(node.view, node.view.tip, /*use_cache=*/false);
            if (encode_bridge_state(pure) != canon_bytes) {
                ok = false;
                why = "node " + id + ": memoized fold differs from pure replay";
                break;
            }
        }
        add("convergence", ok,
            ok ? "all " + std::to_string(nodes.size()) + " nodes agree bitwise (memoized == pure)"
               : why);
    }

    if (da.has_value()) {
        std::ostringstream d;
        d << "frequency " << da->frequency << " vs oracle " << da->oracle << " (tolerance "
          << da->tolerance << "), reconstruction " << (da->reconstructed ? "ok" : "wrong");
        add("da_detection", da->within && da->reconstructed, d.str());
    } else {
        add("da_detection", true, "sampling disabled");
    }

    if (cfg.bridge.leader_mode == LeaderMode::StakedShuffle) {
        add("leader_rotation", facts.leader_ok,
            facts.leader_ok ? "all " + std::to_string(facts.blocks_accepted) +
                                  " accepted blocks match the leader draw"
                            : facts.leader_why);
    } else {
        add("leader_rotation", true, "first-come-first-served mode");
    }

    {
        bool ok = facts.withdraw_sum == st.total_withdrawn &&
                  facts.withdraw_count == st.withdrawals_paid.size();
        add("withdrawals", ok,
            std::to_string(facts.withdraw_count) + " withdrawals paying " +
                std::to_string(facts.withdraw_sum) + " total");
    }

    if (cfg.bridge.halt_height == 0) {
        add("halt_settlement", true, "no halt configured");
    } else {
        bool ok = !facts.halted_height_accepted && st.tip_height + 1 <= cfg.bridge.halt_height;
        add("halt_settlement", ok,
            ok ? "no block accepted at or past height " + std::to_string(cfg.bridge.halt_height)
               : "a block landed at or past the halt height");
    }

    std::set<std::string> expect_fail(cfg.expect.expected_failures.begin(),
                                      cfg.expect.expected_failures.end());
    auto miss = [&rep](std::string m) {
        if (rep.matches_expectation) {
            rep.matches_expectation = false;
            rep.mismatch = std::move(m);
        }
    };
    for (const CheckOutcome& c : rep.checks) {
        bool want_pass = !expect_fail.contains(c.name);
        if (c.passed != want_pass)
            miss("check " + c.name +
                 (c.passed ? " passed but was expected to fail" : " failed: " + c.detail));
    }
    if (cfg.expect.fraud_proofs && *cfg.expect.fraud_proofs != facts.proofs_accepted)
        miss("expected " + std::to_string(*cfg.expect.fraud_proofs) + " fraud proofs, saw " +
             std::to_string(facts.proofs_accepted));
    if (cfg.expect.prover_reward && *cfg.expect.prover_reward != st.rewards_paid)
        miss("expected prover reward " + std::to_string(*cfg.expect.prover_reward) + ", saw " +
             std::to_string(st.rewards_paid));
    if (cfg.expect.bonds_burned && *cfg.expect.bonds_burned != st.bonds_burned)
        miss("expected bonds burned " + std::to_string(*cfg.expect.bonds_burned) + ", saw " +
             std::to_string(st.bonds_burned));
    if (cfg.expect.withdrawals_paid &&
        *cfg.expect.withdrawals_paid != st.withdrawals_paid.size())
        miss("expected " + std::to_string(*cfg.expect.withdrawals_paid) + " withdrawals, saw " +
             std::to_string(st.withdrawals_paid.size()));
    return rep;
}

inline Json final_event_json(const CheckReport& rep, const BridgeState& st,
                             std::uint64_t parent_tip_height) {
    Json checks = Json::array();
    for (const CheckOutcome& c : rep.checks)
        checks.push_back(Json{{"name", c.name}, {"ok", c.passed}, {"detail", c.detail}});
    return Json{{"ev", "final"},
                {"parent_tip_height", parent_tip_height},
                {"side_tip_height", st.tip_height},
                {"bridge_state", to_hex(hash_leaf(encode_bridge_state(st)))},
                {"total_deposited", st.total_deposited},
                {"total_withdrawn", st.total_withdrawn},
                {"rewards_paid", st.rewards_paid},
                {"bonds_burned", st.bonds_burned},
                {"fraud_proofs", rep.fraud_proofs_accepted},
                {"withdrawals", st.withdrawals_paid.size()},
                {"checks", checks},
                {"matches_expectation", rep.matches_expectation},
                {"mismatch", rep.mismatch}};
}

// ---- user traffic ----

// Deterministic wallet-driven load: one deposit wave, claims as soon as the
// registry shows them, round-robin coin-splitting transfers, an optional
// burn and the withdrawal that follows it once the burn's block finalizes.
class TrafficEngine {
  public:
    using EmitTx = std::function<void(const std::string& user, const char* kind,
                                      const Transaction& tx, const Digest& sign)>;
    using EmitCall = std::function<void(const BridgeCall&)>;

    explicit TrafficEngine(ScenarioTraffic cfg = {}) : cfg_(std::move(cfg)) {}

    const std::vector<Digest>& signs() const { return signs_; }

    void step(std::uint64_t round, NodeState& home, const EmitTx& tx_out,
              const EmitCall& call_out) {
        if (cfg_.users.empty()) return;
        harvest(home.tracker);
        send_deposits(call_out);
        send_claims(home, tx_out);
        maybe_burn(round, tx_out);
        send_transfers(round, tx_out);
        maybe_withdraw(home, call_out);
    }

  private:
    struct Coin {
        Outpoint op;
        Output out;
    };
    struct PendingDeposit {
        std::string user;
        std::uint64_t id = 0;
        std::uint64_t amount = 0;
        bool claimed = false;
    };

    void remember(const Digest& sign, const std::string& user, const Transaction& tx,
                  const Digest& txid, std::uint32_t index) {
        pending_[sign].emplace_back(user, Coin{Outpoint{txid, index}, tx.outputs[index]});
    }

    void harvest(const ChainTracker& t) {
        std::vector<Digest> done;
        for (const auto& [sign, coins] : pending_)
            if (t.committed_signs.contains(sign)) done.push_back(sign);
        for (const Digest& sign : done) {
            for (const auto& [user, coin] : pending_[sign]) wallets_[user].push_back(coin);
            pending_.erase(sign);
        }
    }

    void send_deposits(const EmitCall& call_out) {
        if (deposits_sent_ || cfg_.deposits_per_user == 0) return;
        deposits_sent_ = true;
        for (const std::string& user : cfg_.users)
            for (std::uint64_t i = 0; i < cfg_.deposits_per_user; ++i) {
                BridgeCall call =
                    make_deposit(user, user, cfg_.deposit_amount, next_nonce(user));
                deposits_.push_back(
                    PendingDeposit{user, deposit_id_of(call), cfg_.deposit_amount, false});
                call_out(call);
            }
    }

    void send_claims(const NodeState& home, const EmitTx& tx_out) {
        for (PendingDeposit& d : deposits_) {
            if (d.claimed || !home.bridge.deposits.contains(d.id)) continue;
            d.claimed = true;
            Transaction tx;
            tx.kind = Transaction::Kind::DepositClaim;
            tx.deposit_id = d.id;
            tx.amount = d.amount;
            tx.recipient = d.user;
            tx.outputs.push_back(Output{d.amount, Predicate::pay_to_key(d.user)});
            Digest sign = tx_sign_hash(tx);
            remember(sign, d.user, tx, tx_id(tx), 0);
            signs_.push_back(sign);
            tx_out(d.user, "deposit_claim", tx, sign);
        }
    }

    void maybe_burn(std::uint64_t round, const EmitTx& tx_out) {
        if (burn_sent_ || cfg_.burn_round == 0 || round < cfg_.burn_round) return;
        const std::string& user = cfg_.users.front();
        auto it = wallets_.find(user);
        if (it == wallets_.end() || it->second.empty()) return;  // retry next round
        Coin coin = it->second.front();
        it->second.pop_front();
        std::uint64_t v = coin.out.value;
        std::uint64_t b = v >= 2 ? v / 2 : v;
        Transaction tx;
        tx.kind = Transaction::Kind::Burn;
        tx.amount = b;
        tx.parent_recipient = user;
        tx.inputs.push_back(Input{coin.op, {}, coin.out});
        tx.outputs.push_back(Output{b, Predicate::burn(user)});
        if (v - b > 0) tx.outputs.push_back(Output{v - b, Predicate::pay_to_key(user)});
        Digest sign = tx_sign_hash(tx);
        tx.inputs[0].witness = make_pay_witness(user, sign);
        Digest txid = tx_id(tx);
        if (tx.outputs.size() > 1) remember(sign, user, tx, txid, 1);
        burn_sent_ = true;
        burn_tx_ = tx;
        burn_txid_ = txid;
        signs_.push_back(sign);
        tx_out(user, "burn", tx, sign);
    }

    void send_transfers(std::uint64_t round, const EmitTx& tx_out) {
        if (cfg_.transfers_per_round == 0 || round < cfg_.transfer_start) return;
        const std::size_t n = cfg_.users.size();
        for (std::uint64_t sent = 0; sent < cfg_.transfers_per_round; ++sent) {
            if (cfg_.transfer_total != 0 && transfers_sent_ >= cfg_.transfer_total) return;
            std::size_t picked = n;
            for (std::size_t probe = 0; probe < n; ++probe) {
                std::size_t i = (next_sender_ + probe) % n;
                auto it = wallets_.find(cfg_.users[i]);
                if (it != wallets_.end() && !it->second.empty()) {
                    picked = i;
                    break;
                }
            }
            if (picked == n) return;  // nothing spendable until more txs commit
            const std::string& sender = cfg_.users[picked];
            const std::string& recipient = cfg_.users[(picked + 1) % n];
            next_sender_ = (picked + 1) % n;
            Coin coin = wallets_[sender].front();
            wallets_[sender].pop_front();
            std::uint64_t v = coin.out.value;
            Transaction tx;
            tx.kind = Transaction::Kind::Transfer;
            tx.inputs.push_back(Input{coin.op, {}, coin.out});
            if (v >= 2) {
                tx.outputs.push_back(Output{v - v / 2, Predicate::pay_to_key(sender)});
                tx.outputs.push_back(Output{v / 2, Predicate::pay_to_key(recipient)});
            } else {
                tx.outputs.push_back(Output{v, Predicate::pay_to_key(recipient)});
            }
            Digest sign = tx_sign_hash(tx);
            tx.inputs[0].witness = make_pay_witness(sender, sign);
            Digest txid = tx_id(tx);
            if (v >= 2) {
                remember(sign, sender, tx, txid, 0);
                remember(sign, recipient, tx, txid, 1);
            } else {
                remember(sign, recipient, tx, txid, 0);
            }
            ++transfers_sent_;
            signs_.push_back(sign);
            tx_out(sender, "transfer", tx, sign);
        }
    }

    void maybe_withdraw(const NodeState& home, const EmitCall& call_out) {
        if (!cfg_.withdraw || !burn_sent_ || withdraw_sent_) return;
        auto loc = home.tracker.index.tx_by_id.find(burn_txid_);
        if (loc == home.tracker.index.tx_by_id.end()) return;
        const HeaderRecord* rec = home.bridge.find(loc->second.header_hash);
        if (rec == nullptr || rec->status != HeaderStatus::Finalized) return;
        const SideBlock& body = home.tracker.bodies.at(loc->second.header_hash);
        std::vector<Bytes> leaves = block_tx_leaves(body);
        MerkleProof proof = merkle_prove(leaves, loc->second.tx_index);
        const std::string& user = cfg_.users.front();
        withdraw_sent_ = true;
        call_out(make_withdraw(user, loc->second.header_hash, burn_tx_, proof,
                               next_nonce(user)));
    }

    std::uint64_t next_nonce(const std::string& user) { return ++nonce_[user]; }

    ScenarioTraffic cfg_;
    std::map<std::string, std::deque<Coin>> wallets_;
    std::map<Digest, std::vector<std::pair<std::string, Coin>>> pending_;
    std::vector<PendingDeposit> deposits_;
    std::map<std::string, std::uint64_t> nonce_;
    std::vector<Digest> signs_;
    std::uint64_t transfers_sent_ = 0;
    std::size_t next_sender_ = 0;
    bool deposits_sent_ = false;
    bool burn_sent_ = false;
    bool withdraw_sent_ = false;
    Transaction burn_tx_;
    Digest burn_txid_;
};

// ---- the world ----

struct RunResult {
    CheckReport report;
    Json final_event;
    std::optional<DaResult> da;
};

// One deterministic world: every round delivers pending parent blocks
// (respecting partitions), runs traffic, watchers and producers against
// their home nodes, then lets the round's miner seal its mempool. Bridge
// calls live only in their home node's mempool — other nodes learn them
// from mined blocks, exactly like calldata.
class SimWorld {
  public:
    SimWorld(ScenarioConfig cfg, std::uint64_t seed, std::ostream* log_out)
        : cfg_(std::move(cfg)), seed_(seed), log_(log_out), traffic_(cfg_.traffic) {
        for (const std::string& id : cfg_.miners) {
            auto [it, inserted] = nodes_.emplace(id, NodeState(id, cfg_.bridge));
            if (cfg_.censorship.has_value()) {
                const ScenarioCensorship& c = *cfg_.censorship;
                bool applies = c.miners.empty() ||
                               std::find(c.miners.begin(), c.miners.end(), id) != c.miners.end();
                if (applies) {
                    it->second.view.policy.senders.insert(c.senders.begin(), c.senders.end());
                    it->second.view.policy.from_height = c.from_height;
                    it->second.view.policy.duration = c.duration;
                }
            }
            it->second.refresh();
        }
        for (const ScenarioProducer& p : cfg_.producers) {
            ProducerNode actor;
            actor.cfg = ProducerConfig{p.id,   p.kind,  p.max_txs, p.produce_empty,
                                       p.fault, p.fault_height, p.burst};
            producers_.push_back({std::move(actor), p.node});
        }
        for (const ScenarioWatcher& w : cfg_.watchers)
            watchers_.push_back({WatcherNode{w.id, w.delay}, w.node});
    }

    RunResult run() {
        log_.emit(Json{{"ev", "meta"},
                       {"v", kEventLogVersion},
                       {"scenario", cfg_.name},
                       {"seed", seed_},
                       {"rounds", cfg_.rounds},
                       {"miners", cfg_.miners}});
        for (std::uint64_t r = 1; r <= cfg_.rounds; ++r) {
            deliver_blocks(r);
            traffic_step(r);
            for (auto& [actor, home] : watchers_)
                if (auto call = actor.step(nodes_.at(home), r)) submit_home(home, *call, r);
            for (auto& [actor, home] : producers_)
                for (const BridgeCall& call : actor.step(nodes_.at(home)))
                    submit_home(home, call, r);
            mine_round(r);
        }
        deliver_blocks(cfg_.rounds + 1);  // partitions are over: let views converge

        std::optional<DaResult> da;
        if (cfg_.da.enabled) {
            da = run_da_trials(cfg_.da, select_da_payload(canon().tracker), seed_);
            log_.emit(da_event_json(*da));
        }
        CheckReport rep = compute_checks(cfg_, nodes_, safety_, peg_, traffic_.signs(), da);
        Json fin = final_event_json(rep, canon().bridge, canon().view.tip_height);
        log_.emit(fin);
        return RunResult{std::move(rep), std::move(fin), std::move(da)};
    }

  private:
    struct ProducerSlot {
        ProducerNode actor;
        std::string home;
    };
    struct WatcherSlot {
        WatcherNode actor;
        std::string home;
    };

    NodeState& canon() { return nodes_.at(cfg_.miners.front()); }

    bool connected(const std::string& a, const std::string& b, std::uint64_t round) const {
        auto side = [](const ScenarioPartition& p, const std::string& id) {
            return std::find(p.group_a.begin(), p.group_a.end(), id) != p.group_a.end() ? 0 : 1;
        };
        for (const ScenarioPartition& p : cfg_.partitions)
            if (round >= p.from_round && round <= p.to_round && side(p, a) != side(p, b))
                return false;
        return true;
    }

    void observe(const std::string& id, NodeState& node) {
        node.refresh();
        safety_.observe(id, node.bridge);
        peg_.audit(id, node);
    }

    void deliver_blocks(std::uint64_t at_round) {
        for (const std::string& to : cfg_.miners) {
            NodeState& node = nodes_.at(to);
            for (const std::string& from : cfg_.miners) {
                if (from == to) continue;
                const auto& stream = produced_[from];
                std::size_t& cur = cursors_[{from, to}];
                while (cur < stream.size() && connected(from, to, at_round)) {
                    const ParentBlock& b = stream[cur++];
                    log_.emit(Json{{"ev", "deliver"},
                                   {"round", at_round},
                                   {"from", from},
                                   {"to", to},
                                   {"hash", to_hex(b.hash)}});
                    deliver(node.view, b);
                    observe(to, node);
                }
            }
        }
    }

    void traffic_step(std::uint64_t r) {
        traffic_.step(
            r, nodes_.at(cfg_.traffic.node),
            [&](const std::string& user, const char* kind, const Transaction& tx,
                const Digest& sign) {
                log_.emit(Json{{"ev", "tx"},
                               {"round", r},
                               {"user", user},
                               {"kind", kind},
                               {"sign", to_hex(sign)}});
                for (auto& [id, node] : nodes_) node.accept_side_tx(tx);
            },
            [&](const BridgeCall& call) { submit_home(cfg_.traffic.node, call, r); });
    }

    void submit_home(const std::string& node_id, const BridgeCall& call, std::uint64_t r) {
        submit_call(nodes_.at(node_id).view, call);
        log_.emit(Json{{"ev", "call"},
                       {"round", r},
                       {"node", node_id},
                       {"sender", call.sender},
                       {"kind", std::string(to_string(call.kind))},
                       {"id", to_hex(call_id(call))}});
    }

    void mine_round(std::uint64_t r) {
        const std::string& id = cfg_.miners[(r - 1) % cfg_.miners.size()];
        NodeState& node = nodes_.at(id);
        ParentBlock b = mine(node.view);
        produced_[id].push_back(b);
        log_.emit(Json{{"ev", "block"},
                       {"round", r},
                       {"miner", id},
                       {"height", b.height},
                       {"hash", to_hex(b.hash)},
                       {"data", to_hex(encode_parent_block_body(b))}});
        observe(id, node);
    }

    ScenarioConfig cfg_;
    std::uint64_t seed_;
    EventLog log_;
    std::map<std::string, NodeState> nodes_;
    std::vector<ProducerSlot> producers_;
    std::vector<WatcherSlot> watchers_;
    TrafficEngine traffic_;
    SafetyMonitor safety_;
    PegMonitor peg_;
    std::map<std::string, std::vector<ParentBlock>> produced_;
    std::map<std::pair<std::string, std::string>, std::size_t> cursors_;
};

inline RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed,
                              std::ostream* log_out = nullptr) {
    SimWorld world(cfg, seed, log_out);
    return world.run();
}

// ---- log verification ----

struct VerifyResult {
    bool ok = false;                   // reproducible and internally consistent
    bool matches_expectation = false;  // regraded verdict from the replay
    std::vector<std::string> problems;
    CheckReport report;
};

namespace harness_detail {

inline std::string first_difference(const std::string& a, const std::string& b) {
    std::istringstream sa(a), sb(b);
    std::string la, lb;
    std::size_t line = 0;
    while (true) {
        ++line;
        bool ga = static_cast<bool>(std::getline(sa, la));
        bool gb = static_cast<bool>(std::getline(sb, lb));
        if (!ga && !gb) return "identical";
        if (ga != gb || la != lb) return "line " + std::to_string(line);
    }
}

}  // namespace harness_detail

// Two independent verifications of one log against its scenario:
//   1. determinism — a fresh run of (scenario, logged seed) must reproduce
//      the log byte for byte;
//   2. replay — rebuilding every node from nothing but the logged blocks
//      and delivery order must regrade every check and reproduce the logged
//      da/final events exactly, with no producer, watcher or user code
//      involved.
inline VerifyResult verify_log(const std::string& log_text, const ScenarioConfig& cfg) {
    VerifyResult out;
    auto problem = [&out](std::string m) { out.problems.push_back(std::move(m)); };

    std::vector<Json> events;
    try {
        std::istringstream in(log_text);
        events = read_event_log(in);
    } catch (const std::exception& e) {
        problem(e.what());
        return out;
    }
    if (events.empty() || events.front().value("ev", std::string()) != "meta") {
        problem("log does not start with a meta event");
        return out;
    }
    const Json& meta = events.front();
    if (meta.value("v", -1) != kEventLogVersion)
        problem("unsupported log version");
    if (meta.value("scenario", std::string()) != cfg.name)
        problem("scenario mismatch: log is for '" + meta.value("scenario", std::string()) +
                "', config is '" + cfg.name + "'");
    if (meta.value("rounds", std::uint64_t{0}) != cfg.rounds)
        problem("rounds mismatch between log and scenario");
    if (!out.problems.empty()) return out;
    const std::uint64_t seed = meta.value("seed", std::uint64_t{0});

    {
        std::ostringstream rerun;
        run_scenario(cfg, seed, &rerun);
        if (rerun.str() != log_text)
            problem("log is not byte-identical to a deterministic re-run (first difference: " +
                    harness_detail::first_difference(log_text, rerun.str()) + ")");
    }

    std::map<std::string, NodeState> nodes;
    for (const std::string& id : cfg.miners) {
        auto [it, inserted] = nodes.emplace(id, NodeState(id, cfg.bridge));
        it->second.refresh();
    }
    SafetyMonitor safety;
    PegMonitor peg;
    std::map<Digest, ParentBlock> by_hash;
    std::vector<Digest> signs;
    const Json* logged_da = nullptr;
    const Json* logged_final = nullptr;

    auto observe = [&](const std::string& id, NodeState& node) {
        node.refresh();
        safety.observe(id, node.bridge);
        peg.audit(id, node);
    };

    try {
        for (std::size_t i = 1; i < events.size(); ++i) {
            const Json& e = events[i];
            const std::string ev = e.at("ev").get<std::string>();
            if (ev == "block") {
                ParentBlock b = decode_parent_block_body(from_hex(e.at("data").get<std::string>()));
                if (to_hex(b.hash) != e.at("hash").get<std::string>()) {
                    problem("block event hash does not match its data");
                    break;
                }
                const std::string miner = e.at("miner").get<std::string>();
                if (b.producer != miner || b.height != e.at("height").get<std::uint64_t>()) {
                    problem("block event metadata does not match its data");
                    break;
                }
                auto it = nodes.find(miner);
                if (it == nodes.end()) {
                    problem("block mined by unknown miner " + miner);
                    break;
                }
                by_hash.emplace(b.hash, b);
                deliver(it->second.view, b);
                if (it->second.view.tip != b.hash) {
                    problem("block " + to_hex(b.hash) + " does not extend its miner's chain");
                    break;
                }
                observe(miner, it->second);
            } else if (ev == "deliver") {
                auto bit = by_hash.find(digest_from_hex(e.at("hash").get<std::string>()));
                if (bit == by_hash.end()) {
                    problem("delivered block was never mined");
                    break;
                }
                auto it = nodes.find(e.at("to").get<std::string>());
                if (it == nodes.end()) {
                    problem("delivery to unknown node");
                    break;
                }
                deliver(it->second.view, bit->second);
                observe(it->first, it->second);
            } else if (ev == "tx") {
                signs.push_back(digest_from_hex(e.at("sign").get<std::string>()));
            } else if (ev == "call") {
                // informational: the call's effect is visible in block data
            } else if (ev == "da") {
                logged_da = &e;
            } else if (ev == "final") {
                logged_final = &e;
            } else {
                problem("unknown event kind '" + ev + "'");
                break;
            }
        }
    } catch (const std::exception& e) {
        problem(std::string("malformed event: ") + e.what());
    }
    if (!out.problems.empty()) {
        out.ok = false;
        return out;
    }

    std::optional<DaResult> da;
    if (cfg.da.enabled) {
        da = run_da_trials(cfg.da, select_da_payload(nodes.at(cfg.miners.front()).tracker), seed);
        if (logged_da == nullptr)
            problem("missing da event");
        else if (*logged_da != da_event_json(*da))
            problem("logged da event does not match the replayed computation");
    } else if (logged_da != nullptr) {
        problem("unexpected da event in a scenario without sampling");
    }

    out.report = compute_checks(cfg, nodes, safety, peg, signs, da);
    NodeState& canon = nodes.at(cfg.miners.front());
    Json fin = final_event_json(out.report, canon.bridge, canon.view.tip_height);
    if (logged_final == nullptr)
        problem("missing final event");
    else if (*logged_final != fin)
        problem("logged final event does not match the replayed verdict");

    out.matches_expectation = out.report.matches_expectation;
    out.ok = out.problems.empty();
    return out;
}

}  // namespace rollsim
