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

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tomobench/experiments.hpp"

using namespace tomo;
using experiments::ExperimentConfig;
using experiments::Kind;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_fig1() {
    ExperimentConfig cfg = experiments::default_config(Kind::fig1);
    cfg.d = 2;
    cfg.m = 6;
    cfg.M_grid = {4, 8};
    cfg.N_grid = {100, 200};
    cfg.trials = 8;
    cfg.master_seed = 77;
    cfg.workers = 2;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tomobench_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_SUITE("experiments") {

TEST_CASE("default configs pin the benchmark grids") {
    const auto fig1 = experiments::default_config(Kind::fig1);
    CHECK(fig1.d == 6);
    CHECK(fig1.m == 40);
    CHECK(fig1.N_grid == std::vector<std::int64_t>{500, 1000, 2000, 5000});
    CHECK(fig1.M_grid == std::vector<int>{50, 100, 200, 400, 800, 1200});
    CHECK(fig1.trials == 300);
    CHECK(fig1.admixture_signal == 0.1);
    CHECK(fig1.admixture_probes == 0.0);
    CHECK(fig1.estimator == sim::EstimatorKind::ols);

    const auto fig2 = experiments::default_config(Kind::fig2);
    CHECK(fig2.N_grid == std::vector<std::int64_t>{500, 1000, 3000});

    const auto fig3 = experiments::default_config(Kind::fig3);
    CHECK(fig3.N_grid == std::vector<std::int64_t>{1000});
    CHECK(fig3.M_grid == std::vector<int>{1200});
    CHECK(fig3.window == 0.001);
}

TEST_CASE("run_fig1: table shape and CRLB structure") {
    const auto cfg = tiny_fig1();
    const auto table = experiments::run_fig1(cfg);
    REQUIRE(table.rows.size() == 4); // |N_grid| * |M_grid|

    for (const auto& row : table.rows) {
        CHECK(row.sweep_kind == "fig1");
        CHECK(row.coord_name == "M");
        CHECK(row.coord_value == static_cast<double>(row.M));
        CHECK(row.trials_used == 8);
        CHECK(std::isfinite(row.mse_dqst));
        CHECK(std::isfinite(row.mse_dpt));
        CHECK(row.fid_dqst >= 0.0);
        CHECK(row.fid_dqst <= 1.0);
        CHECK(std::isnan(row.bias_fro)); // not tracked by fig1
    }
    // CRLB is M-independent within each N (bitwise: same inputs).
    CHECK(table.rows[0].crlb == table.rows[1].crlb);
    CHECK(table.rows[2].crlb == table.rows[3].crlb);
    CHECK(table.rows[0].N == 100);
    CHECK(table.rows[2].N == 200);
    // Doubling N halves the bound exactly.
    CHECK(table.rows[2].crlb == table.rows[0].crlb / 2.0);

    // The wrong kind is rejected up front.
    ExperimentConfig wrong = cfg;
    wrong.kind = Kind::fig2;
    CHECK_THROWS_AS(experiments::run_fig1(wrong), InvalidInput);
}

TEST_CASE("run_fig2: noiseless override has vanishing bias") {
    ExperimentConfig cfg = experiments::default_config(Kind::fig2);
    cfg.d = 2;
    cfg.m = 6;
    cfg.M_grid = {4}; // full column rank regime
    cfg.N_grid = {1000000000};
    cfg.trials = 64;
    cfg.master_seed = 5;
    cfg.workers = 2;
    const auto table = experiments::run_fig2(cfg);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].bias_fro < 1e-4);
    CHECK(std::isfinite(table.rows[0].bias_se));
}

TEST_CASE("run_fig2: noisy bias is positive and resolved") {
    ExperimentConfig cfg = experiments::default_config(Kind::fig2);
    cfg.d = 2;
    cfg.m = 6;
    cfg.M_grid = {24};
    cfg.N_grid = {300};
    cfg.trials = 40;
    cfg.master_seed = 6;
    cfg.workers = 2;
    const auto table = experiments::run_fig2(cfg);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].bias_fro > 0.0);
    CHECK(table.rows[0].bias_se > 0.0);
    CHECK(table.rows[0].bias_fro > table.rows[0].bias_se);
}

TEST_CASE("run_fig3: windows honored, exhausted bins skipped") {
    ExperimentConfig cfg = experiments::default_config(Kind::fig3);
    cfg.d = 2;
    cfg.m = 6;
    cfg.M_grid = {8};
    cfg.N_grid = {200};
    cfg.trials = 5;
    cfg.master_seed = 8;
    cfg.workers = 2;
    cfg.max_attempts = 5000;
    cfg.window = 0.02;
    // First target sits far above the populated 1/kappa range and cannot be
    // hit; the second is the empirical median and fills quickly.
    const double median =
        experiments::auto_inv_cond_grid(cfg, 1, 200).front();
    cfg.inv_cond_grid = {0.99, median};
    const auto table = experiments::run_fig3(cfg);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].trials_used == 0); // unavailable, run continued
    CHECK(std::isnan(table.rows[0].mse_dqst));
    CHECK(table.rows[1].trials_used == 5);
    CHECK(std::isfinite(table.rows[1].mse_dqst));
    CHECK(table.rows[1].coord_name == "inv_cond");
}

TEST_CASE("auto_inv_cond_grid spans the populated range") {
    ExperimentConfig cfg = experiments::default_config(Kind::fig3);
    cfg.d = 2;
    cfg.m = 6;
    cfg.workers = 2;
    const auto grid = experiments::auto_inv_cond_grid(cfg, 4, 300);
    REQUIRE(grid.size() == 4);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid[i] > grid[i - 1]);
    }
    CHECK(grid.front() > 0.0);
    CHECK(grid.back() < 1.0);
}

TEST_CASE("csv serialization round-trips at its fixed precision") {
    const auto cfg = tiny_fig1();
    const auto table = experiments::run_fig1(cfg);
    const std::string text = experiments::to_csv(table);
    const auto parsed = experiments::parse_csv(text);
    REQUIRE(parsed.rows.size() == table.rows.size());
    // Serialization is a fixed point after one parse.
    CHECK(experiments::to_csv(parsed) == text);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        CHECK(parsed.rows[i].sweep_kind == table.rows[i].sweep_kind);
        CHECK(parsed.rows[i].N == table.rows[i].N);
        CHECK(parsed.rows[i].M == table.rows[i].M);
        CHECK(parsed.rows[i].mse_dqst ==
              doctest::Approx(table.rows[i].mse_dqst).epsilon(1e-11));
        CHECK(parsed.rows[i].trials_used == table.rows[i].trials_used);
    }

    CHECK_THROWS_AS(experiments::parse_csv("bad header\n1,2,3\n"),
                    InvalidInput);
}

TEST_CASE("write_results: files, meta seed, determinism") {
    const auto cfg = tiny_fig1();
    const auto table = experiments::run_fig1(cfg);

    const fs::path dir1 = fresh_dir("exp_a");
    const auto written =
        experiments::write_results(table, cfg, dir1, true, 1.5);
    CHECK(fs::exists(dir1 / "results.csv"));
    CHECK(fs::exists(dir1 / "meta.json"));
    CHECK(fs::exists(dir1 / "fig1_N100.svg"));
    CHECK(fs::exists(dir1 / "fig1_N200.svg"));
    CHECK(written.size() == 4);

    const auto meta = nlohmann::json::parse(slurp(dir1 / "meta.json"));
    CHECK(meta.at("master_seed").get<std::uint64_t>() == 77);
    CHECK(meta.at("kind").get<std::string>() == "fig1");
    CHECK(meta.contains("version"));
    CHECK(meta.contains("timestamp"));
    CHECK(meta.contains("elapsed_seconds"));

    const std::string svg = slurp(dir1 / "fig1_N100.svg");
    CHECK(svg.rfind("<svg", 0) == 0);

    // A rerun from the written meta.json reproduces results.csv
    // byte-for-byte, no matter the worker count.
    ExperimentConfig replay = experiments::config_from_json(meta);
    replay.workers = 1;
    const auto table2 = experiments::run_experiment(replay);
    CHECK(experiments::to_csv(table2) == slurp(dir1 / "results.csv"));

    fs::remove_all(dir1);
}

TEST_CASE("config json: unknown keys rejected, provenance ignored") {
    const auto cfg = tiny_fig1();
    auto j = experiments::config_to_json(cfg);
    j["version"] = "v9.9.9";
    j["timestamp"] = "2026-01-01T00:00:00Z";
    j["elapsed_seconds"] = 3.0;
    const auto parsed = experiments::config_from_json(j);
    CHECK(parsed.kind == Kind::fig1);
    CHECK(parsed.d == cfg.d);
    CHECK(parsed.M_grid == cfg.M_grid);
    CHECK(parsed.N_grid == cfg.N_grid);
    CHECK(parsed.master_seed == cfg.master_seed);

    j["mystery_key"] = 1;
    CHECK_THROWS_AS(experiments::config_from_json(j), InvalidInput);

    nlohmann::json bad_type = experiments::config_to_json(cfg);
    bad_type["trials"] = "many";
    CHECK_THROWS_AS(experiments::config_from_json(bad_type), InvalidInput);
}

TEST_CASE("set_config_key: overrides and rejection") {
    ExperimentConfig cfg = experiments::default_config(Kind::fig1);
    experiments::set_config_key(cfg, "trials", "12");
    CHECK(cfg.trials == 12);
    experiments::set_config_key(cfg, "M_grid", "10,20,30");
    CHECK(cfg.M_grid == std::vector<int>{10, 20, 30});
    experiments::set_config_key(cfg, "estimator", "gls");
    CHECK(cfg.estimator == sim::EstimatorKind::gls);
    experiments::set_config_key(cfg, "master_seed", "123456789");
    CHECK(cfg.master_seed == 123456789);
    experiments::set_config_key(cfg, "admixture_signal", "0.25");
    CHECK(cfg.admixture_signal == 0.25);

    CHECK_THROWS_AS(experiments::set_config_key(cfg, "no_such_key", "1"),
                    InvalidInput);
    CHECK_THROWS_AS(experiments::set_config_key(cfg, "trials", "soon"),
                    InvalidInput);
}

TEST_CASE("gls estimator is wired through the sweep") {
    ExperimentConfig cfg = tiny_fig1();
    cfg.estimator = sim::EstimatorKind::gls;
    cfg.M_grid = {8};
    cfg.N_grid = {150};
    const auto table = experiments::run_fig1(cfg);
    REQUIRE(table.rows.size() == 1);
    CHECK(std::isfinite(table.rows[0].mse_dqst));
    CHECK(table.rows[0].mse_dqst > 0.0);
}

} // TEST_SUITE
