// Copyright 2026 The tomobench authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point. Subcommands run one sweep each (fig1, fig2,
// fig3), `run` replays a JSON configuration (any previous run's meta.json is
// a valid input), and `selftest` executes the fast invariant suites.
//
// Configuration precedence per key: explicit flag > config file > built-in
// default. Exit codes: 0 success, 1 runtime error, 2 argument error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tomobench/experiments.hpp"
#include "selftest.hpp"

namespace {

namespace fs = std::filesystem;
using tomo::experiments::ExperimentConfig;
using tomo::experiments::Kind;

struct CommonFlags {
    std::uint64_t seed = 0;
    int trials = 0;
    std::string out_dir;
    std::string workers = "auto";
    bool plot = false;
    bool full_scale = false;
    std::vector<std::string> overrides;

    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
    CLI::Option* workers_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    flags.seed_opt =
        cmd->add_option("--seed", flags.seed, "Master seed (64-bit)");
    flags.trials_opt = cmd->add_option("--trials", flags.trials,
                                       "Monte Carlo trials per sweep point");
    cmd->add_option("--out-dir", flags.out_dir,
                    "Output directory (fallback: $TOMOBENCH_OUT_DIR, then "
                    "./out)");
    flags.workers_opt = cmd->add_option(
        "--workers", flags.workers, "Worker threads: a count or 'auto'");
    cmd->add_flag("--plot,!--no-plot", flags.plot,
                  "Write one SVG per event budget");
    cmd->add_flag("--full-scale", flags.full_scale,
                  "Use 1000 trials per sweep point");
    cmd->add_option("--set", flags.overrides,
                    "Override a config key, e.g. --set M_grid=50,100 "
                    "(repeatable)")
        ->take_all();
}

int parse_workers(const std::string& text) {
    if (text == "auto") {
        return 0;
    }
    try {
        const int value = std::stoi(text);
        if (value < 1) {
            throw tomo::InvalidInput("--workers must be >= 1 or 'auto'");
        }
        return value;
    } catch (const std::exception&) {
        throw tomo::InvalidInput("--workers must be >= 1 or 'auto', got '" +
                                 text + "'");
    }
}

fs::path resolve_out_dir(const CommonFlags& flags) {
    if (!flags.out_dir.empty()) {
        return flags.out_dir;
    }
    if (const char* env = std::getenv("TOMOBENCH_OUT_DIR");
        env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

/// Precedence: built-in defaults, then the config file, then --set
/// overrides, then explicit flags.
ExperimentConfig build_config(Kind kind, const CommonFlags& flags,
                              const std::string& config_path) {
    ExperimentConfig cfg = tomo::experiments::default_config(kind);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw tomo::InvalidInput("cannot open config file: " +
                                     config_path);
        }
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw tomo::InvalidInput("config file " + config_path +
                                     " is not valid JSON: " + e.what());
        }
        cfg = tomo::experiments::config_from_json(j);
    }
    for (const auto& item : flags.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw tomo::InvalidInput("--set expects key=value, got '" + item +
                                     "'");
        }
        tomo::experiments::set_config_key(cfg, item.substr(0, eq),
                                          item.substr(eq + 1));
    }
    if (flags.full_scale) {
        cfg.trials = 1000;
    }
    if (flags.trials_opt->count() > 0) {
        cfg.trials = flags.trials;
    }
    if (flags.seed_opt->count() > 0) {
        cfg.master_seed = flags.seed;
    }
    if (flags.workers_opt->count() > 0) {
        cfg.workers = parse_workers(flags.workers);
    }
    return cfg;
}

int execute(Kind kind, const CommonFlags& flags,
            const std::string& config_path) {
    const ExperimentConfig cfg = build_config(kind, flags, config_path);
    const fs::path out_dir = resolve_out_dir(flags);
    const auto start = std::chrono::steady_clock::now();
    const tomo::experiments::ResultTable table =
        tomo::experiments::run_experiment(cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      start)
            .count();
    const auto written = tomo::experiments::write_results(
        table, cfg, out_dir, flags.plot, elapsed);
    std::cout << tomo::experiments::kind_name(cfg.kind) << ": "
              << table.rows.size() << " sweep points in " << elapsed
              << " s\n";
    for (const auto& path : written) {
        std::cout << "  wrote " << path.string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum state tomography strategy benchmark: "
                 "detector-assisted estimation (DQST) versus data-pattern "
                 "tomography (DPT) under Poisson noise"};
    app.require_subcommand(1);

    CommonFlags fig1_flags, fig2_flags, fig3_flags, run_flags;
    std::string config_path;
    std::uint64_t selftest_seed = 42;

    CLI::App* fig1 = app.add_subcommand(
        "fig1", "MSE and fidelity vs probe count, one series per N");
    add_common_flags(fig1, fig1_flags);
    CLI::App* fig2 = app.add_subcommand(
        "fig2", "Bias of the DPT design-matrix estimate vs probe count");
    add_common_flags(fig2, fig2_flags);
    CLI::App* fig3 = app.add_subcommand(
        "fig3", "MSE vs inverse condition number of the design matrix");
    add_common_flags(fig3, fig3_flags);
    CLI::App* run = app.add_subcommand(
        "run", "Replay a JSON config (a previous run's meta.json works)");
    run->add_option("config", config_path, "Path to the JSON configuration")
        ->required();
    add_common_flags(run, run_flags);
    CLI::App* selftest =
        app.add_subcommand("selftest", "Run the fast invariant suites");
    selftest->add_option("--seed", selftest_seed, "Suite RNG seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fig1->parsed()) {
            return execute(Kind::fig1, fig1_flags, "");
        }
        if (fig2->parsed()) {
            return execute(Kind::fig2, fig2_flags, "");
        }
        if (fig3->parsed()) {
            return execute(Kind::fig3, fig3_flags, "");
        }
        if (run->parsed()) {
            if (!fs::exists(config_path)) {
                std::cerr << "error: config file does not exist: "
                          << config_path << "\n";
                return 2;
            }
            // Kind comes from the file; the placeholder is overwritten.
            return execute(Kind::custom, run_flags, config_path);
        }
        if (selftest->parsed()) {
            const int failures = tomo::selftest::run_all(selftest_seed);
            if (failures > 0) {
                std::cerr << failures << " suite(s) failed\n";
                return 1;
            }
            return 0;
        }
    } catch (const tomo::InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
