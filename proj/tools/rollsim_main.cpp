// rollsim — run and verify rollup simulation scenarios.
//
//   rollsim run <scenario.toml> [--seed N] [--out log.jsonl]
//   rollsim verify <log.jsonl> <scenario.toml>
//   rollsim scenarios list
//
// `run` exits 0 iff the outcome matches the scenario's [expect] section.
// `verify` exits 0 on a faithful log whose replay matches expectations,
// 1 when the replayed verdict is a mismatch, 2 when the log itself is bad.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "rollsim/rollsim.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scenario_dir() {
    if (const char* env = std::getenv("ROLLSIM_SCENARIO_DIR")) return env;
#ifdef ROLLSIM_SCENARIO_DIR
    return ROLLSIM_SCENARIO_DIR;
#else
    return "scenarios";
#endif
}

// Bare names resolve against the bundled scenario directory.
std::string resolve_scenario(const std::string& arg) {
    if (fs::exists(arg)) return arg;
    fs::path p = scenario_dir() / arg;
    if (fs::exists(p)) return p.string();
    p += ".toml";
    if (fs::exists(p)) return p.string();
    throw std::runtime_error("scenario not found: " + arg);
}

void print_report(const rollsim::CheckReport& rep) {
    for (const rollsim::CheckOutcome& c : rep.checks)
        std::cout << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name << ": " << c.detail
                  << "\n";
}

int cmd_run(const std::string& scenario_arg, std::optional<std::uint64_t> seed,
            const std::string& out_path) {
    rollsim::ScenarioConfig cfg = rollsim::load_scenario(read_file(resolve_scenario(scenario_arg)));
    const std::uint64_t use_seed = seed.value_or(cfg.seed);

    std::ostringstream log;
    rollsim::RunResult res = rollsim::run_scenario(cfg, use_seed, &log);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << log.str();
    }

    std::cout << "scenario " << cfg.name << " (seed " << use_seed << ", " << cfg.rounds
              << " rounds)\n";
    print_report(res.report);
    if (res.report.matches_expectation) {
        std::cout << "verdict: as expected\n";
        return 0;
    }
    std::cout << "verdict: MISMATCH — " << res.report.mismatch << "\n";
    return 1;
}

int cmd_verify(const std::string& log_path, const std::string& scenario_arg) {
    rollsim::ScenarioConfig cfg = rollsim::load_scenario(read_file(resolve_scenario(scenario_arg)));
    rollsim::VerifyResult res = rollsim::verify_log(read_file(log_path), cfg);
    if (!res.ok) {
        for (const std::string& p : res.problems) std::cout << "problem: " << p << "\n";
        std::cout << "verdict: log rejected\n";
        return 2;
    }
    print_report(res.report);
    if (res.matches_expectation) {
        std::cout << "verdict: log verified, outcome as expected\n";
        return 0;
    }
    std::cout << "verdict: log verified, outcome MISMATCH — " << res.report.mismatch << "\n";
    return 1;
}

int cmd_list() {
    fs::path dir = scenario_dir();
    if (!fs::is_directory(dir)) {
        std::cout << "no scenario directory at " << dir.string() << "\n";
        return 1;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".toml") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        try {
            rollsim::ScenarioConfig cfg = rollsim::load_scenario(read_file(f.string()));
            std::cout << f.filename().string() << "  —  " << cfg.name << " (" << cfg.rounds
                      << " rounds, " << cfg.miners.size()
                      << (cfg.miners.size() == 1 ? " miner)" : " miners)") << "\n";
        } catch (const std::exception& e) {
            std::cout << f.filename().string() << "  —  invalid: " << e.what() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimistic-rollup simulation harness"};
    app.require_subcommand(1);

    std::string scenario_arg, log_path, out_path;
    std::optional<std::uint64_t> seed;

    CLI::App* run = app.add_subcommand("run", "run a scenario and grade its checks");
    run->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();
    run->add_option("--seed", seed, "override the scenario's seed");
    run->add_option("--out", out_path, "write the JSONL event log here");

    CLI::App* verify = app.add_subcommand("verify", "check a log against its scenario");
    verify->add_option("log", log_path, "JSONL event log")->required();
    verify->add_option("scenario", scenario_arg, "scenario file or bundled name")->required();

    CLI::App* scenarios = app.add_subcommand("scenarios", "bundled scenario tools");
    CLI::App* list = scenarios->add_subcommand("list", "list bundled scenarios");
    scenarios->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(scenario_arg, seed, out_path);
        if (verify->parsed()) return cmd_verify(log_path, scenario_arg);
        if (list->parsed()) return cmd_list();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
