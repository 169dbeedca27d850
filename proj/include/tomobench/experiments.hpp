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

/**
 * @file experiments.hpp
 * Declarative figure-level experiments and their flat-file serialization.
 *
 * Three sweep kinds are provided:
 *   fig1 - mean square error and fidelity of DQST/DPT versus probe count,
 *          one series per event budget, with the perfect-knowledge CRLB;
 *   fig2 - bias of the mean estimated DPT design matrix versus probe count;
 *   fig3 - error versus the inverse condition number of the design matrix,
 *          with measurements rejection-sampled into condition bins.
 *
 * Every run is reproducible from its meta.json: the file mirrors the
 * configuration (including the master seed), and any meta.json is itself a
 * valid input configuration.
 */
#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tomobench/errors.hpp"
#include "tomobench/plot.hpp"
#include "tomobench/simulation.hpp"

namespace tomo::experiments {

inline constexpr const char* kVersion = "v0.2.0";

inline constexpr const char* kCsvHeader =
    "sweep_kind,coord_name,coord_value,N,M,mse_dqst,mse_dqst_se,mse_dpt,"
    "mse_dpt_se,crlb,fid_dqst,fid_dpt,bias_fro,trials_used";

enum class Kind { fig1, fig2, fig3, custom };

inline std::string kind_name(Kind kind) {
    switch (kind) {
    case Kind::fig1: return "fig1";
    case Kind::fig2: return "fig2";
    case Kind::fig3: return "fig3";
    case Kind::custom: return "custom";
    }
    throw InvalidInput("kind_name: unknown kind");
}

inline Kind kind_from_name(const std::string& name) {
    if (name == "fig1") return Kind::fig1;
    if (name == "fig2") return Kind::fig2;
    if (name == "fig3") return Kind::fig3;
    if (name == "custom") return Kind::custom;
    throw InvalidInput("unknown experiment kind: " + name);
}

struct ExperimentConfig {
    Kind kind = Kind::custom;
    int d = 6;
    int m = 40;
    std::vector<int> M_grid = {50, 100, 200, 400, 800, 1200};
    std::vector<std::int64_t> N_grid = {1000};
    int trials = 300;
    double admixture_signal = 0.1;
    double admixture_probes = 0.0;
    sim::EstimatorKind estimator = sim::EstimatorKind::ols;
    std::uint64_t master_seed = 19;
    std::vector<double> inv_cond_grid; // fig3 only; empty = auto pre-pass
    double window = 0.001;             // fig3 acceptance window
    std::int64_t max_attempts = 2000000;
    int workers = 0; // 0 = auto
};

/// Built-in defaults per sweep kind.
inline ExperimentConfig default_config(Kind kind) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    switch (kind) {
    case Kind::fig1:
    case Kind::custom:
        cfg.N_grid = {500, 1000, 2000, 5000};
        break;
    case Kind::fig2:
        cfg.N_grid = {500, 1000, 3000};
        break;
    case Kind::fig3:
        cfg.N_grid = {1000};
        cfg.M_grid = {1200};
        break;
    }
    return cfg;
}

/// One sweep point. bias_se is carried for in-process consumers but is not
/// part of the CSV schema.
struct ResultRow {
    std::string sweep_kind;
    std::string coord_name;
    double coord_value = 0.0;
    std::int64_t N = 0;
    int M = 0;
    double mse_dqst = std::numeric_limits<double>::quiet_NaN();
    double mse_dqst_se = std::numeric_limits<double>::quiet_NaN();
    double mse_dpt = std::numeric_limits<double>::quiet_NaN();
    double mse_dpt_se = std::numeric_limits<double>::quiet_NaN();
    double crlb = std::numeric_limits<double>::quiet_NaN();
    double fid_dqst = std::numeric_limits<double>::quiet_NaN();
    double fid_dpt = std::numeric_limits<double>::quiet_NaN();
    double bias_fro = std::numeric_limits<double>::quiet_NaN();
    int trials_used = 0;
    double bias_se = std::numeric_limits<double>::quiet_NaN();
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

namespace stream_tag {
inline constexpr std::uint64_t kMeasurement = 0x4D45;
inline constexpr std::uint64_t kState = 0x5354;
inline constexpr std::uint64_t kProbes = 0x5052;
inline constexpr std::uint64_t kTrials = 0x5452;
inline constexpr std::uint64_t kPrepass = 0x5050;
inline constexpr std::uint64_t kFig3 = 0x4633;
} // namespace stream_tag

namespace detail {

/// Draws a square-root measurement from m Haar kets, redrawing on the
/// measure-zero degenerate Gram case.
inline quantum::Povm draw_measurement(int d, int m, RngStream rng) {
    for (int attempt = 0; attempt < 128; ++attempt) {
        std::vector<quantum::Ket> kets;
        kets.reserve(m);
        for (int j = 0; j < m; ++j) {
            kets.push_back(quantum::haar_pure(d, rng));
        }
        try {
            return quantum::square_root_povm(kets);
        } catch (const DegenerateMeasurement&) {
            continue;
        }
    }
    throw DegenerateMeasurement(
        "draw_measurement: persistent rank-deficient Gram matrix");
}

inline quantum::DensityMatrix draw_signal_state(int d, double admixture,
                                                RngStream rng) {
    return quantum::depolarize(
        quantum::pure_state(quantum::haar_pure(d, rng)), admixture);
}

} // namespace detail

/// Linear-interpolation quantile of a sample (q in [0,1]).
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InvalidInput("quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

/**
 * Pre-pass for fig3: samples `draws` unconditioned square-root measurements
 * and places `bins` targets at evenly spaced quantiles of the observed
 * inverse-condition-number distribution, so every bin is populated enough
 * for rejection sampling to succeed.
 */
inline std::vector<double> auto_inv_cond_grid(const ExperimentConfig& config,
                                              int bins, int draws = 2000) {
    if (bins < 1 || draws < bins) {
        throw InvalidInput("auto_inv_cond_grid: bad bin/draw counts");
    }
    const quantum::GeneratorBasis basis = quantum::gell_mann_basis(config.d);
    const RngStream root =
        RngStream(config.master_seed).derive(stream_tag::kPrepass);
    std::vector<double> samples(draws);
    sim::detail::parallel_for(draws, config.workers, [&](int i) {
        RngStream rng = root.derive(static_cast<std::uint64_t>(i));
        const quantum::Povm povm =
            detail::draw_measurement(config.d, config.m, rng);
        const double kappa = matlin::condition_number(
            estimators::design_matrix(povm, basis).traceless().eval());
        samples[i] = std::isinf(kappa) ? 0.0 : 1.0 / kappa;
    });
    std::vector<double> grid(bins);
    for (int b = 0; b < bins; ++b) {
        const double q =
            bins == 1 ? 0.5
                      : 0.05 + 0.9 * static_cast<double>(b) /
                                   static_cast<double>(bins - 1);
        grid[b] = quantile(samples, q);
    }
    return grid;
}

namespace detail {

/// Shared sweep body for fig1/fig2/custom: one fixed measurement and one
/// fixed true state per run, fresh probe sets per sweep point, Monte Carlo
/// per (N, M).
inline ResultTable run_probe_sweep(const ExperimentConfig& config,
                                   bool retain_design) {
    if (config.trials < 2) {
        throw InvalidInput("run_probe_sweep: need trials >= 2");
    }
    if (config.M_grid.empty() || config.N_grid.empty()) {
        throw InvalidInput("run_probe_sweep: empty sweep grid");
    }
    const quantum::GeneratorBasis basis = quantum::gell_mann_basis(config.d);
    const RngStream root(config.master_seed);
    const quantum::Povm povm = detail::draw_measurement(
        config.d, config.m, root.derive(stream_tag::kMeasurement));
    const quantum::DensityMatrix true_state = detail::draw_signal_state(
        config.d, config.admixture_signal, root.derive(stream_tag::kState));

    ResultTable table;
    const std::string kind = kind_name(config.kind);
    for (std::size_t ni = 0; ni < config.N_grid.size(); ++ni) {
        for (std::size_t mi = 0; mi < config.M_grid.size(); ++mi) {
            const std::int64_t n_events = config.N_grid[ni];
            const int m_probes = config.M_grid[mi];
            RngStream probe_rng =
                root.derive(stream_tag::kProbes, ni).derive(mi);
            sim::ProbeSet probes = sim::generate_probe_set(
                config.d, m_probes, config.admixture_probes, probe_rng,
                basis);
            const sim::TrialSetup setup =
                sim::make_trial_setup(povm, true_state, std::move(probes),
                                      basis, config.estimator);
            sim::MonteCarloOptions options;
            options.n_events = n_events;
            options.trials = config.trials;
            options.retain_design = retain_design;
            options.workers = config.workers;
            const sim::AggregateResult agg = sim::monte_carlo(
                setup, options, root.derive(stream_tag::kTrials, ni).derive(mi));

            ResultRow row;
            row.sweep_kind = kind;
            row.coord_name = "M";
            row.coord_value = static_cast<double>(m_probes);
            row.N = n_events;
            row.M = m_probes;
            row.mse_dqst = agg.mean_sq_err_dqst;
            row.mse_dqst_se = agg.se_sq_err_dqst;
            row.mse_dpt = agg.mean_sq_err_dpt;
            row.mse_dpt_se = agg.se_sq_err_dpt;
            row.crlb = agg.crlb_value;
            row.fid_dqst = agg.mean_fid_dqst;
            row.fid_dpt = agg.mean_fid_dpt;
            row.bias_fro = agg.bias;
            row.bias_se = agg.bias_se;
            row.trials_used = agg.trials_used;
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

} // namespace detail

/// Error and fidelity versus probe count, one series per event budget.
inline ResultTable run_fig1(const ExperimentConfig& config) {
    if (config.kind != Kind::fig1) {
        throw InvalidInput("run_fig1: config.kind must be fig1");
    }
    return detail::run_probe_sweep(config, /*retain_design=*/false);
}

/// Bias of the DPT design-matrix estimator versus probe count. Reuses the
/// fig1 measurement and state derivation, so a shared seed reproduces the
/// same apparatus.
inline ResultTable run_fig2(const ExperimentConfig& config) {
    if (config.kind != Kind::fig2) {
        throw InvalidInput("run_fig2: config.kind must be fig2");
    }
    return detail::run_probe_sweep(config, /*retain_design=*/true);
}

/// Error versus the inverse condition number of the design matrix. Each
/// accepted measurement is used for exactly one trial with a fresh true
/// state and a fresh probe set.
inline ResultTable run_fig3(const ExperimentConfig& config) {
    if (config.kind != Kind::fig3) {
        throw InvalidInput("run_fig3: config.kind must be fig3");
    }
    if (config.trials < 2) {
        throw InvalidInput("run_fig3: need trials >= 2");
    }
    const quantum::GeneratorBasis basis = quantum::gell_mann_basis(config.d);
    const RngStream root(config.master_seed);
    const std::vector<double> targets = config.inv_cond_grid.empty()
                                            ? auto_inv_cond_grid(config, 6)
                                            : config.inv_cond_grid;
    const std::int64_t n_events = config.N_grid.front();
    const int m_probes = config.M_grid.front();

    ResultTable table;
    for (std::size_t bi = 0; bi < targets.size(); ++bi) {
        const double target = targets[bi];
        const int count = config.trials;
        std::vector<std::optional<sim::TrialOutcome>> slots(count);
        std::vector<double> crlb_values(
            count, std::numeric_limits<double>::quiet_NaN());
        std::vector<std::string> failures(count);
        std::atomic<bool> exhausted{false};

        sim::detail::parallel_for(count, config.workers, [&](int i) {
            RngStream rng = root.derive(stream_tag::kFig3, bi)
                                .derive(static_cast<std::uint64_t>(i));
            try {
                auto [povm, design] = sim::sample_measurement_with_condition(
                    config.d, config.m, target, config.window,
                    config.max_attempts, rng, basis);
                quantum::DensityMatrix state = detail::draw_signal_state(
                    config.d, config.admixture_signal, rng.derive(1));
                RngStream probe_rng = rng.derive(2);
                sim::ProbeSet probes = sim::generate_probe_set(
                    config.d, m_probes, config.admixture_probes, probe_rng,
                    basis);
                const sim::TrialSetup setup = sim::make_trial_setup(
                    std::move(povm), std::move(state), std::move(probes),
                    basis, config.estimator);
                crlb_values[i] = estimators::crlb(estimators::fisher_matrix(
                    setup.design, setup.signal_probs, n_events));
                slots[i] = sim::run_trial(setup, n_events, rng.derive(3));
            } catch (const SamplingExhausted& e) {
                exhausted.store(true);
                failures[i] = e.what();
            } catch (const TomoError& e) {
                failures[i] = e.what();
            }
        });

        ResultRow row;
        row.sweep_kind = kind_name(config.kind);
        row.coord_name = "inv_cond";
        row.coord_value = target;
        row.N = n_events;
        row.M = m_probes;

        std::vector<sim::TrialOutcome> outcomes;
        std::vector<double> crlb_ok;
        int failed = 0;
        std::string first_failure;
        for (int i = 0; i < count; ++i) {
            if (slots[i].has_value()) {
                outcomes.push_back(std::move(*slots[i]));
                crlb_ok.push_back(crlb_values[i]);
            } else {
                ++failed;
                if (first_failure.empty()) {
                    first_failure = failures[i];
                }
            }
        }
        if (exhausted.load()) {
            // Row stays unavailable; keep going with the other bins.
            std::cerr << "fig3: bin " << target
                      << " unavailable: " << first_failure << "\n";
            table.rows.push_back(std::move(row));
            continue;
        }
        if (failed * 100 > count) {
            throw SimulationAborted(
                "run_fig3: " + std::to_string(failed) + " of " +
                std::to_string(count) +
                " measurements failed; first failure: " + first_failure);
        }
        const sim::AggregateResult agg = sim::aggregate(outcomes);
        row.mse_dqst = agg.mean_sq_err_dqst;
        row.mse_dqst_se = agg.se_sq_err_dqst;
        row.mse_dpt = agg.mean_sq_err_dpt;
        row.mse_dpt_se = agg.se_sq_err_dpt;
        row.crlb = sim::detail::sorted_mean(crlb_ok);
        row.fid_dqst = agg.mean_fid_dqst;
        row.fid_dpt = agg.mean_fid_dpt;
        row.trials_used = agg.trials_used;
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Dispatch on config.kind; `custom` behaves like fig1 with free grids.
inline ResultTable run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
    case Kind::fig1: return run_fig1(config);
    case Kind::fig2: return run_fig2(config);
    case Kind::fig3: return run_fig3(config);
    case Kind::custom:
        return detail::run_probe_sweep(config, /*retain_design=*/false);
    }
    throw InvalidInput("run_experiment: unknown kind");
}

// ---------------------------------------------------------------------------
// serialization

namespace detail {

/// Fixed numeric format: decimal, 12 significant digits.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void atomic_write(const std::filesystem::path& path,
                         const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw TomoError("cannot open for writing: " + tmp.string());
        }
        out << contents;
        if (!out.flush()) {
            throw TomoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw TomoError("rename failed for " + path.string() + ": " +
                        ec.message());
    }
}

inline double parse_double(const std::string& field) {
    try {
        return std::stod(field);
    } catch (const std::exception&) {
        throw InvalidInput("results.csv: bad numeric field '" + field + "'");
    }
}

} // namespace detail

inline std::string to_csv(const ResultTable& table) {
    std::ostringstream out;
    out << kCsvHeader << "\n";
    for (const auto& row : table.rows) {
        out << row.sweep_kind << ',' << row.coord_name << ','
            << detail::format_number(row.coord_value) << ',' << row.N << ','
            << row.M << ',' << detail::format_number(row.mse_dqst) << ','
            << detail::format_number(row.mse_dqst_se) << ','
            << detail::format_number(row.mse_dpt) << ','
            << detail::format_number(row.mse_dpt_se) << ','
            << detail::format_number(row.crlb) << ','
            << detail::format_number(row.fid_dqst) << ','
            << detail::format_number(row.fid_dpt) << ','
            << detail::format_number(row.bias_fro) << ',' << row.trials_used
            << "\n";
    }
    return out.str();
}

inline ResultTable parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw InvalidInput("results.csv: unexpected header");
    }
    ResultTable table;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        std::istringstream row_in(line);
        while (std::getline(row_in, field, ',')) {
            fields.push_back(field);
        }
        if (fields.size() != 14) {
            throw InvalidInput("results.csv: wrong field count");
        }
        ResultRow row;
        row.sweep_kind = fields[0];
        row.coord_name = fields[1];
        row.coord_value = detail::parse_double(fields[2]);
        row.N = static_cast<std::int64_t>(std::stoll(fields[3]));
        row.M = std::stoi(fields[4]);
        row.mse_dqst = detail::parse_double(fields[5]);
        row.mse_dqst_se = detail::parse_double(fields[6]);
        row.mse_dpt = detail::parse_double(fields[7]);
        row.mse_dpt_se = detail::parse_double(fields[8]);
        row.crlb = detail::parse_double(fields[9]);
        row.fid_dqst = detail::parse_double(fields[10]);
        row.fid_dpt = detail::parse_double(fields[11]);
        row.bias_fro = detail::parse_double(fields[12]);
        row.trials_used = std::stoi(fields[13]);
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline ResultTable read_results(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) {
        throw TomoError("cannot open " + csv_path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

inline std::string estimator_name(sim::EstimatorKind kind) {
    return kind == sim::EstimatorKind::gls ? "gls" : "ols";
}

inline sim::EstimatorKind estimator_from_name(const std::string& name) {
    if (name == "ols") return sim::EstimatorKind::ols;
    if (name == "gls") return sim::EstimatorKind::gls;
    throw InvalidInput("unknown estimator: " + name);
}

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(config.kind);
    j["d"] = config.d;
    j["m"] = config.m;
    j["M_grid"] = config.M_grid;
    j["N_grid"] = config.N_grid;
    j["trials"] = config.trials;
    j["admixture_signal"] = config.admixture_signal;
    j["admixture_probes"] = config.admixture_probes;
    j["estimator"] = estimator_name(config.estimator);
    j["master_seed"] = config.master_seed;
    j["inv_cond_grid"] = config.inv_cond_grid;
    j["window"] = config.window;
    j["max_attempts"] = config.max_attempts;
    j["workers"] = config.workers;
    return j;
}

/// Parses a configuration (or a previous run's meta.json, which is a valid
/// configuration). Unknown keys are rejected; the provenance keys written by
/// write_results are accepted and ignored.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidInput("config: expected a JSON object");
    }
    Kind kind = Kind::custom;
    if (j.contains("kind")) {
        kind = kind_from_name(j.at("kind").get<std::string>());
    }
    ExperimentConfig cfg = default_config(kind);
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "kind") {
                continue;
            } else if (key == "d") {
                cfg.d = value.get<int>();
            } else if (key == "m") {
                cfg.m = value.get<int>();
            } else if (key == "M_grid") {
                cfg.M_grid = value.get<std::vector<int>>();
            } else if (key == "N_grid") {
                cfg.N_grid = value.get<std::vector<std::int64_t>>();
            } else if (key == "trials") {
                cfg.trials = value.get<int>();
            } else if (key == "admixture_signal") {
                cfg.admixture_signal = value.get<double>();
            } else if (key == "admixture_probes") {
                cfg.admixture_probes = value.get<double>();
            } else if (key == "estimator") {
                cfg.estimator =
                    estimator_from_name(value.get<std::string>());
            } else if (key == "master_seed") {
                cfg.master_seed = value.get<std::uint64_t>();
            } else if (key == "inv_cond_grid") {
                cfg.inv_cond_grid = value.get<std::vector<double>>();
            } else if (key == "window") {
                cfg.window = value.get<double>();
            } else if (key == "max_attempts") {
                cfg.max_attempts = value.get<std::int64_t>();
            } else if (key == "workers") {
                cfg.workers = value.get<int>();
            } else if (key == "version" || key == "timestamp" ||
                       key == "elapsed_seconds") {
                continue; // provenance written by write_results
            } else {
                throw InvalidInput("config: unknown key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput("config: bad value for '" + key +
                               "': " + e.what());
        }
    }
    return cfg;
}

/// Single `key=value` override applied on top of a configuration; grids take
/// comma-separated values. Unknown keys are rejected before any computation.
inline void set_config_key(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
    const auto split_list = [](const std::string& text) {
        std::vector<std::string> items;
        std::string item;
        std::istringstream in(text);
        while (std::getline(in, item, ',')) {
            items.push_back(item);
        }
        return items;
    };
    try {
        if (key == "kind") {
            cfg.kind = kind_from_name(value);
        } else if (key == "d") {
            cfg.d = std::stoi(value);
        } else if (key == "m") {
            cfg.m = std::stoi(value);
        } else if (key == "M_grid") {
            cfg.M_grid.clear();
            for (const auto& item : split_list(value)) {
                cfg.M_grid.push_back(std::stoi(item));
            }
        } else if (key == "N_grid") {
            cfg.N_grid.clear();
            for (const auto& item : split_list(value)) {
                cfg.N_grid.push_back(std::stoll(item));
            }
        } else if (key == "trials") {
            cfg.trials = std::stoi(value);
        } else if (key == "admixture_signal") {
            cfg.admixture_signal = std::stod(value);
        } else if (key == "admixture_probes") {
            cfg.admixture_probes = std::stod(value);
        } else if (key == "estimator") {
            cfg.estimator = estimator_from_name(value);
        } else if (key == "master_seed") {
            cfg.master_seed = std::stoull(value);
        } else if (key == "inv_cond_grid") {
            cfg.inv_cond_grid.clear();
            for (const auto& item : split_list(value)) {
                cfg.inv_cond_grid.push_back(std::stod(item));
            }
        } else if (key == "window") {
            cfg.window = std::stod(value);
        } else if (key == "max_attempts") {
            cfg.max_attempts = std::stoll(value);
        } else if (key == "workers") {
            cfg.workers = std::stoi(value);
        } else {
            throw InvalidInput("unknown config key '" + key + "'");
        }
    } catch (const std::invalid_argument&) {
        throw InvalidInput("bad value for config key '" + key + "': " +
                           value);
    } catch (const std::out_of_range&) {
        throw InvalidInput("value out of range for config key '" + key +
                           "': " + value);
    }
}

namespace detail {

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline plot::LineChart chart_for(const ResultTable& table, Kind kind,
                                 std::int64_t n_events) {
    plot::LineChart chart;
    chart.log_y = true;
    plot::Series dqst{"DQST", "#1f77b4", 'o', {}};
    plot::Series dpt{"DPT", "#d62728", 's', {}};
    double crlb = std::numeric_limits<double>::quiet_NaN();
    for (const auto& row : table.rows) {
        if (row.N != n_events || row.trials_used == 0) {
            continue;
        }
        if (kind == Kind::fig2) {
            dpt.points.emplace_back(row.coord_value, row.bias_fro);
        } else {
            dqst.points.emplace_back(row.coord_value, row.mse_dqst);
            dpt.points.emplace_back(row.coord_value, row.mse_dpt);
        }
        crlb = row.crlb;
    }
    const std::string n_text = "N = " + std::to_string(n_events);
    if (kind == Kind::fig2) {
        chart.title = "DPT design-matrix bias vs probe count, " + n_text;
        chart.x_label = "probe count M";
        chart.y_label = "|| mean(A_p) - A ||_F";
        chart.log_x = true;
        dpt.label = "DPT bias";
        chart.series = {dpt};
    } else if (kind == Kind::fig3) {
        chart.title = "MSE vs inverse condition number, " + n_text;
        chart.x_label = "1 / condition number of A";
        chart.y_label = "mean square error";
        chart.log_x = false;
        chart.series = {dqst, dpt};
    } else {
        chart.title = "MSE vs probe count, " + n_text;
        chart.x_label = "probe count M";
        chart.y_label = "mean square error";
        chart.log_x = true;
        chart.series = {dqst, dpt};
        if (std::isfinite(crlb)) {
            chart.reference_lines.push_back({crlb, "CRLB", "#000000"});
        }
    }
    return chart;
}

} // namespace detail

/**
 * Writes results.csv and meta.json (and one SVG per event budget when
 * `with_plots` is set) into out_dir. Files appear atomically; a failed run
 * never leaves a partial results.csv behind.
 */
inline std::vector<std::filesystem::path>
write_results(const ResultTable& table, const ExperimentConfig& config,
              const std::filesystem::path& out_dir, bool with_plots,
              double elapsed_seconds) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw TomoError("cannot create output directory " +
                        out_dir.string() + ": " + ec.message());
    }
    std::vector<fs::path> written;

    const fs::path csv_path = out_dir / "results.csv";
    detail::atomic_write(csv_path, to_csv(table));
    written.push_back(csv_path);

    nlohmann::ordered_json meta = config_to_json(config);
    meta["version"] = kVersion;
    meta["timestamp"] = detail::iso8601_utc_now();
    meta["elapsed_seconds"] = elapsed_seconds;
    const fs::path meta_path = out_dir / "meta.json";
    detail::atomic_write(meta_path, meta.dump(2) + "\n");
    written.push_back(meta_path);

    if (with_plots) {
        for (const std::int64_t n_events : config.N_grid) {
            const plot::LineChart chart =
                detail::chart_for(table, config.kind, n_events);
            const fs::path svg_path =
                out_dir / (kind_name(config.kind) + "_N" +
                           std::to_string(n_events) + ".svg");
            detail::atomic_write(svg_path, chart.render());
            written.push_back(svg_path);
        }
    }
    return written;
}

} // namespace tomo::experiments
