#pragma once

// Typed scenario configuration loaded from TOML. Validation happens here,
// with section/key context in every error, so the harness can assume a
// well-formed world description.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rollsim/bridge.hpp"
#include "rollsim/consensus.hpp"
#include "rollsim/faults.hpp"
#include "rollsim/toml.hpp"

namespace rollsim {

struct ScenarioProducer {
    std::string id;
    std::string node;  // miner id this producer's replica follows
    ProducerKind kind = ProducerKind::Honest;
    bool produce_empty = false;
    std::uint64_t max_txs = 1024;
    FaultKind fault = FaultKind::None;
    std::uint64_t fault_height = 0;
    std::uint32_t burst = 1;
};

struct ScenarioWatcher {
    std::string id;
    std::string node;
    std::uint64_t delay = 0;
};

struct ScenarioPartition {
    std::uint64_t from_round = 0;
    std::uint64_t to_round = 0;  // inclusive
    std::vector<std::string> group_a;
    std::vector<std::string> group_b;
};

struct ScenarioCensorship {
    std::vector<std::string> senders;
    std::uint64_t from_height = 0;
    std::uint64_t duration = 0;
    std::vector<std::string> miners;  // empty = every miner censors
};

struct ScenarioTraffic {
    std::vector<std::string> users;
    std::string node;  // miner the users watch and submit through
    std::uint64_t deposits_per_user = 0;
    std::uint64_t deposit_amount = 0;
    std::uint64_t transfers_per_round = 0;
    std::uint64_t transfer_start = 1;
    std::uint64_t transfer_total = 0;  // 0 = unlimited
    std::uint64_t burn_round = 0;      // 0 = no burn; else users[0] burns half a coin
    bool withdraw = false;             // follow the burn with a withdrawal
};

struct ScenarioDa {
    bool enabled = false;
    std::uint32_t n = 16;
    std::uint32_t k = 8;
    std::uint32_t samples = 3;
    std::uint32_t hidden = 0;
    std::uint64_t trials = 0;
    double tolerance = 0.02;
};

struct ScenarioExpect {
    std::vector<std::string> expected_failures;
    std::uint64_t min_tip_height = 0;
    bool all_traffic_committed = false;
    std::optional<std::uint64_t> fraud_proofs;
    std::optional<std::uint64_t> prover_reward;
    std::optional<std::uint64_t> bonds_burned;
    std::optional<std::uint64_t> withdrawals_paid;
    std::optional<std::string> proof_scheme;   // "segment_replay" | "citation"
    std::optional<std::string> proof_variant;  // citation flavor
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t rounds = 0;
    std::uint64_t seed = 1;
    BridgeParams bridge;
    std::vector<std::string> miners;
    std::vector<ScenarioProducer> producers;
    std::vector<ScenarioWatcher> watchers;
    ScenarioTraffic traffic;
    std::vector<ScenarioPartition> partitions;
    std::optional<ScenarioCensorship> censorship;
    ScenarioDa da;
    ScenarioExpect expect;
};

// Check names the harness computes; [expect] expected_failures must draw
// from this list.
inline const std::set<std::string>& known_checks() {
    static const std::set<std::string> names = {
        "liveness",        "safety",          "no_invalid_finalization",
        "peg_conservation", "fraud_economics", "proof_scheme",
        "convergence",      "da_detection",    "leader_rotation",
        "withdrawals",      "halt_settlement",
    };
    return names;
}

namespace cfgdetail {

struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TableView {
    const TomlTable* t = nullptr;
    std::string where;

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ScenarioError("scenario [" + where + "] " + key + ": " + msg);
    }

    const TomlValue* find(const std::string& key) const {
        return t == nullptr ? nullptr : toml_find(*t, key);
    }

    std::uint64_t u64(const std::string& key) const {
        const TomlValue* v = find(key);
        if (v == nullptr) fail(key, "required integer missing");
        if (v->kind != TomlValue::Kind::Int || v->i < 0) fail(key, "must be a non-negative integer");
        return static_cast<std::uint64_t>(v->i);
    }

    std::uint64_t u64_or(const std::string& key, std::uint64_t def) const {
        return find(key) == nullptr ? def : u64(key);
    }

    std::string str(const std::string& key) const {
        const TomlValue* v = find(key);
        if (v == nullptr) fail(key, "required string missing");
        if (v->kind != TomlValue::Kind::Str) fail(key, "must be a string");
        return v->str;
    }

    std::string str_or(const std::string& key, const std::string& def) const {
        return find(key) == nullptr ? def : str(key);
    }

    bool bool_or(const std::string& key, bool def) const {
        const TomlValue* v = find(key);
        if (v == nullptr) return def;
        if (v->kind != TomlValue::Kind::Bool) fail(key, "must be a boolean");
        return v->b;
    }

    double f64_or(const std::string& key, double def) const {
        const TomlValue* v = find(key);
        if (v == nullptr) return def;
        if (v->kind != TomlValue::Kind::Float && v->kind != TomlValue::Kind::Int)
            fail(key, "must be a number");
        return v->as_float();
    }

    std::vector<std::string> strs_or(const std::string& key) const {
        const TomlValue* v = find(key);
        if (v == nullptr) return {};
        if (v->kind != TomlValue::Kind::Array) fail(key, "must be an array of strings");
        std::vector<std::string> out;
        for (const TomlValue& e : v->arr) {
            if (e.kind != TomlValue::Kind::Str) fail(key, "must be an array of strings");
            out.push_back(e.str);
        }
        return out;
    }
};

}  // namespace cfgdetail

inline ScenarioConfig load_scenario(std::string_view toml_text) {
    using cfgdetail::ScenarioError;
    using cfgdetail::TableView;
    TomlDoc doc = parse_toml(toml_text);
    auto table = [&](const std::string& name) -> TableView {
        auto it = doc.tables.find(name);
        return TableView{it == doc.tables.end() ? nullptr : &it->second, name};
    };

    ScenarioConfig cfg;

    TableView sc = table("scenario");
    if (sc.t == nullptr) throw ScenarioError("scenario: missing [scenario] section");
    cfg.name = sc.str("name");
    cfg.rounds = sc.u64("rounds");
    if (cfg.rounds == 0) sc.fail("rounds", "must be positive");
    cfg.seed = sc.u64_or("seed", 1);

    TableView br = table("bridge");
    cfg.bridge.bond = br.u64_or("bond", cfg.bridge.bond);
    cfg.bridge.finalization_delay = br.u64_or("finalization_delay", cfg.bridge.finalization_delay);
    cfg.bridge.segment_size = br.u64_or("segment_size", cfg.bridge.segment_size);
    cfg.bridge.challenge_window = br.u64_or("challenge_window", cfg.bridge.challenge_window);
    cfg.bridge.halt_height = br.u64_or("halt_height", 0);
    if (cfg.bridge.bond == 0) br.fail("bond", "must be positive");
    if (cfg.bridge.segment_size == 0) br.fail("segment_size", "must be positive");
    std::string mode = br.str_or("leader_mode", "fcfs");
    if (mode == "fcfs") {
        cfg.bridge.leader_mode = LeaderMode::Fcfs;
    } else if (mode == "staked_shuffle") {
        cfg.bridge.leader_mode = LeaderMode::StakedShuffle;
        cfg.bridge.stakers = br.strs_or("stakers");
        if (cfg.bridge.stakers.empty()) br.fail("stakers", "staked_shuffle needs stakers");
    } else {
        br.fail("leader_mode", "unknown mode '" + mode + "'");
    }

    auto miner_tables = doc.table_arrays.find("miners");
    if (miner_tables == doc.table_arrays.end()) {
        cfg.miners.push_back("m0");
    } else {
        for (const TomlTable& t : miner_tables->second)
            cfg.miners.push_back(TableView{&t, "miners"}.str("id"));
    }
    std::set<std::string> miner_ids(cfg.miners.begin(), cfg.miners.end());
    if (miner_ids.size() != cfg.miners.size())
        throw ScenarioError("scenario [miners]: duplicate id");
    auto check_node = [&](TableView& view, const std::string& node) {
        if (!miner_ids.contains(node)) view.fail("node", "unknown miner '" + node + "'");
        return node;
    };

    if (auto it = doc.table_arrays.find("producers"); it != doc.table_arrays.end()) {
        for (const TomlTable& t : it->second) {
            TableView v{&t, "producers"};
            ScenarioProducer p;
            p.id = v.str("id");
            p.node = check_node(v, v.str_or("node", cfg.miners.front()));
            std::string kind = v.str_or("kind", "honest");
            if (kind == "honest") {
                p.kind = ProducerKind::Honest;
            } else if (kind == "fault_injector") {
                p.kind = ProducerKind::FaultInjector;
            } else if (kind == "withholding") {
                p.kind = ProducerKind::Withholding;
            } else {
                v.fail("kind", "unknown producer kind '" + kind + "'");
            }
            p.produce_empty = v.bool_or("produce_empty", false);
            p.max_txs = v.u64_or("max_txs", 1024);
            if (p.max_txs == 0) v.fail("max_txs", "must be positive");
            if (p.kind == ProducerKind::FaultInjector) {
                auto f = parse_fault_kind(v.str("fault"));
                if (!f.has_value() || *f == FaultKind::None)
                    v.fail("fault", "unknown fault kind");
                p.fault = *f;
                p.fault_height = v.u64("fault_height");
                p.burst = static_cast<std::uint32_t>(v.u64_or("burst", 1));
                if (p.burst == 0) v.fail("burst", "must be positive");
            }
            cfg.producers.push_back(std::move(p));
        }
    }

    if (auto it = doc.table_arrays.find("watchers"); it != doc.table_arrays.end()) {
        for (const TomlTable& t : it->second) {
            TableView v{&t, "watchers"};
            ScenarioWatcher w;
            w.id = v.str("id");
            w.node = check_node(v, v.str_or("node", cfg.miners.front()));
            w.delay = v.u64_or("delay", 0);
            cfg.watchers.push_back(std::move(w));
        }
    }

    TableView tr = table("traffic");
    if (tr.t != nullptr) {
        cfg.traffic.users = tr.strs_or("users");
        if (std::uint64_t n = tr.u64_or("user_count", 0); n != 0) {
            if (!cfg.traffic.users.empty()) tr.fail("user_count", "give users or user_count, not both");
            for (std::uint64_t i = 0; i < n; ++i) cfg.traffic.users.push_back("u" + std::to_string(i));
        }
        cfg.traffic.node = check_node(tr, tr.str_or("node", cfg.miners.front()));
        cfg.traffic.deposits_per_user = tr.u64_or("deposits_per_user", 0);
        cfg.traffic.deposit_amount = tr.u64_or("deposit_amount", 0);
        cfg.traffic.transfers_per_round = tr.u64_or("transfers_per_round", 0);
        cfg.traffic.transfer_start = tr.u64_or("transfer_start", 1);
        cfg.traffic.transfer_total = tr.u64_or("transfer_total", 0);
        cfg.traffic.burn_round = tr.u64_or("burn_round", 0);
        cfg.traffic.withdraw = tr.bool_or("withdraw", false);
        if (cfg.traffic.deposits_per_user > 0 && cfg.traffic.deposit_amount == 0)
            tr.fail("deposit_amount", "deposits need a positive amount");
        if (cfg.traffic.deposits_per_user > 0 && cfg.traffic.users.empty())
            tr.fail("users", "deposits need at least one user");
        if (cfg.traffic.burn_round > 0 && cfg.traffic.users.empty())
            tr.fail("users", "a burn needs a user");
    } else {
        cfg.traffic.node = cfg.miners.front();
    }

    if (auto it = doc.table_arrays.find("partitions"); it != doc.table_arrays.end()) {
        for (const TomlTable& t : it->second) {
            TableView v{&t, "partitions"};
            ScenarioPartition p;
            p.from_round = v.u64("from_round");
            p.to_round = v.u64("to_round");
            if (p.to_round < p.from_round) v.fail("to_round", "window ends before it starts");
            p.group_a = v.strs_or("group_a");
            p.group_b = v.strs_or("group_b");
            std::set<std::string> seen;
            for (const auto& m : p.group_a)
                if (!miner_ids.contains(m) || !seen.insert(m).second)
                    v.fail("group_a", "must list distinct miners");
            for (const auto& m : p.group_b)
                if (!miner_ids.contains(m) || !seen.insert(m).second)
                    v.fail("group_b", "must list distinct miners");
            if (seen.size() != miner_ids.size())
                v.fail("group_b", "groups must cover every miner");
            cfg.partitions.push_back(std::move(p));
        }
    }

    TableView cen = table("censorship");
    if (cen.t != nullptr) {
        ScenarioCensorship c;
        c.senders = cen.strs_or("senders");
        if (c.senders.empty()) cen.fail("senders", "must name at least one sender");
        c.from_height = cen.u64("from_height");
        c.duration = cen.u64("duration");
        if (c.duration == 0) cen.fail("duration", "must be positive");
        c.miners = cen.strs_or("miners");
        for (const auto& m : c.miners)
            if (!miner_ids.contains(m)) cen.fail("miners", "unknown miner '" + m + "'");
        cfg.censorship = std::move(c);
    }

    TableView da = table("da");
    if (da.t != nullptr) {
        cfg.da.enabled = da.bool_or("enabled", true);
        cfg.da.n = static_cast<std::uint32_t>(da.u64_or("n", 16));
        cfg.da.k = static_cast<std::uint32_t>(da.u64_or("k", 8));
        cfg.da.samples = static_cast<std::uint32_t>(da.u64_or("samples", 3));
        cfg.da.hidden = static_cast<std::uint32_t>(da.u64_or("hidden", 0));
        cfg.da.trials = da.u64_or("trials", 0);
        cfg.da.tolerance = da.f64_or("tolerance", 0.02);
        if (cfg.da.k == 0 || cfg.da.n < cfg.da.k || cfg.da.n > 65535)
            da.fail("k", "need 0 < k <= n <= 65535");
        if (cfg.da.samples == 0 || cfg.da.samples > cfg.da.n)
            da.fail("samples", "need 0 < samples <= n");
        if (cfg.da.hidden > cfg.da.n) da.fail("hidden", "more hidden chunks than chunks");
        if (cfg.da.enabled && cfg.da.trials == 0) da.fail("trials", "must be positive");
        if (cfg.da.tolerance <= 0.0) da.fail("tolerance", "must be positive");
    }

    TableView ex = table("expect");
    if (ex.t != nullptr) {
        cfg.expect.expected_failures = ex.strs_or("expected_failures");
        for (const std::string& c : cfg.expect.expected_failures)
            if (!known_checks().contains(c))
                ex.fail("expected_failures", "unknown check '" + c + "'");
        cfg.expect.min_tip_height = ex.u64_or("min_tip_height", 0);
        cfg.expect.all_traffic_committed = ex.bool_or("all_traffic_committed", false);
        if (ex.find("fraud_proofs") != nullptr) cfg.expect.fraud_proofs = ex.u64("fraud_proofs");
        if (ex.find("prover_reward") != nullptr) cfg.expect.prover_reward = ex.u64("prover_reward");
        if (ex.find("bonds_burned") != nullptr) cfg.expect.bonds_burned = ex.u64("bonds_burned");
        if (ex.find("withdrawals_paid") != nullptr)
            cfg.expect.withdrawals_paid = ex.u64("withdrawals_paid");
        if (ex.find("proof_scheme") != nullptr) {
            std::string s = ex.str("proof_scheme");
            if (s != "segment_replay" && s != "citation")
                ex.fail("proof_scheme", "must be segment_replay or citation");
            cfg.expect.proof_scheme = s;
        }
        if (ex.find("proof_variant") != nullptr) {
            std::string s = ex.str("proof_variant");
            if (s != "output_mismatch" && s != "prior_spend" && s != "no_such_output")
                ex.fail("proof_variant", "unknown variant '" + s + "'");
            cfg.expect.proof_variant = s;
        }
    }

    std::set<std::string> actor_ids;
    for (const auto& p : cfg.producers)
        if (!actor_ids.insert(p.id).second)
            throw ScenarioError("scenario [producers]: duplicate id '" + p.id + "'");
    for (const auto& w : cfg.watchers)
        if (!actor_ids.insert(w.id).second)
            throw ScenarioError("scenario [watchers]: duplicate id '" + w.id + "'");
    for (const auto& u : cfg.traffic.users)
        if (!actor_ids.insert(u).second)
            throw ScenarioError("scenario [traffic]: duplicate user id '" + u + "'");

    return cfg;
}

}  // namespace rollsim
