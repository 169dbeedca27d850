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
 * @file simulation.hpp
 * Stochastic data generation and Monte Carlo aggregation.
 *
 * Determinism contract: every random quantity is drawn from an RngStream
 * keyed by (master_seed, derived stream index), trials own disjoint child
 * streams, and aggregation reduces samples in a canonical (sorted) order.
 * Identical configuration and seed therefore produce bit-identical results
 * for any worker count, and aggregate() is invariant under permutation of
 * the trial outcomes it is fed.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "tomobench/errors.hpp"
#include "tomobench/estimators.hpp"
#include "tomobench/matlin.hpp"
#include "tomobench/quantum.hpp"
#include "tomobench/rng.hpp"

namespace tomo::sim {

using matlin::RealMatrix;

/// Purpose tags folded into derived stream indices.
namespace stream_tag {
inline constexpr std::uint64_t kPatterns = 0x5041;
inline constexpr std::uint64_t kSignal = 0x5347;
inline constexpr std::uint64_t kBootstrap = 0x4253;
} // namespace stream_tag

enum class EstimatorKind { ols, gls };
enum class BiasNorm { frobenius, trace };

/// f_j = N_j / N with independent N_j ~ Poisson(N p_j) per outcome.
inline Eigen::VectorXd sample_poisson_frequencies(const Eigen::VectorXd& p,
                                                  std::int64_t n_events,
                                                  RngStream& rng) {
    if (n_events < 1) {
        throw InvalidInput("sample_poisson_frequencies: need n_events >= 1");
    }
    if (!p.allFinite() || p.minCoeff() < 0.0) {
        throw InvalidInput("sample_poisson_frequencies: bad probabilities");
    }
    const auto n = static_cast<double>(n_events);
    Eigen::VectorXd f(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        f(j) = static_cast<double>(rng.poisson(n * p(j))) / n;
    }
    return f;
}

/// Probe states together with their Bloch-vector matrix R.
struct ProbeSet {
    estimators::ProbeMatrix matrix;
    std::vector<quantum::DensityMatrix> states;
};

/// M probes drawn as Haar-random pure states, optionally depolarized.
/// Probe alpha consumes the child stream rng.derive(alpha).
inline ProbeSet generate_probe_set(int d, int M, double admixture,
                                   RngStream& rng,
                                   const quantum::GeneratorBasis& basis) {
    if (M < 1) {
        throw InvalidInput("generate_probe_set: need M >= 1");
    }
    if (basis.dim() != d) {
        throw InvalidInput("generate_probe_set: basis dimension mismatch");
    }
    RealMatrix columns(d * d, M);
    std::vector<quantum::DensityMatrix> states;
    states.reserve(M);
    for (int alpha = 0; alpha < M; ++alpha) {
        RngStream sub = rng.derive(static_cast<std::uint64_t>(alpha));
        quantum::DensityMatrix state = quantum::depolarize(
            quantum::pure_state(quantum::haar_pure(d, sub)), admixture);
        columns.col(alpha) = quantum::bloch_from_state(state, basis).coords;
        states.push_back(std::move(state));
    }
    return ProbeSet{estimators::ProbeMatrix{d, M, std::move(columns)},
                    std::move(states)};
}

namespace detail {

/// One Poisson-noisy frequency column per column of `probs`; column alpha
/// uses the child stream rng.derive(alpha).
inline RealMatrix poisson_columns(const RealMatrix& probs,
                                  std::int64_t n_events, RngStream& rng) {
    RealMatrix out(probs.rows(), probs.cols());
    for (Eigen::Index alpha = 0; alpha < probs.cols(); ++alpha) {
        RngStream sub = rng.derive(static_cast<std::uint64_t>(alpha));
        out.col(alpha) =
            sample_poisson_frequencies(probs.col(alpha), n_events, sub);
    }
    return out;
}

} // namespace detail

/// Measured responses of the probe set: one Poisson acquisition per probe.
inline estimators::PatternMatrix
generate_patterns(const quantum::Povm& povm,
                  const std::vector<quantum::DensityMatrix>& probes,
                  std::int64_t n_events_per_probe, RngStream& rng) {
    if (probes.empty()) {
        throw InvalidInput("generate_patterns: empty probe list");
    }
    RealMatrix probs(povm.outcomes(), static_cast<Eigen::Index>(probes.size()));
    for (std::size_t alpha = 0; alpha < probes.size(); ++alpha) {
        probs.col(static_cast<Eigen::Index>(alpha)) =
            quantum::born_probs(probes[alpha], povm);
    }
    return estimators::PatternMatrix{
        povm.outcomes(), static_cast<int>(probes.size()),
        detail::poisson_columns(probs, n_events_per_probe, rng)};
}

/// Scalars produced by one simulated data acquisition. Fidelities use the
/// square-root Uhlmann convention on Frobenius-projected estimates. The
/// estimated DPT design matrix is retained only when the bias experiment
/// asks for it.
struct TrialOutcome {
    double sq_err_dqst = 0.0;
    double sq_err_dpt = 0.0;
    double fid_dqst = 0.0;
    double fid_dpt = 0.0;
    std::optional<RealMatrix> est_design_dpt;
};

/// Everything a trial needs, precomputed once per sweep point so that trials
/// only draw noise and invert.
struct TrialSetup {
    quantum::Povm povm;
    quantum::DensityMatrix true_state;
    quantum::GeneratorBasis basis;
    ProbeSet probes;
    estimators::DesignMatrix design;
    Eigen::VectorXd signal_probs;
    RealMatrix pattern_probs;
    RealMatrix probe_pinv;
    Eigen::VectorXd true_traceless;
    EstimatorKind estimator = EstimatorKind::ols;
};

inline TrialSetup make_trial_setup(quantum::Povm povm,
                                   quantum::DensityMatrix true_state,
                                   ProbeSet probes,
                                   const quantum::GeneratorBasis& basis,
                                   EstimatorKind estimator) {
    if (povm.dim() != true_state.dim() ||
        povm.dim() != probes.matrix.d || basis.dim() != povm.dim()) {
        throw InvalidInput("make_trial_setup: dimension mismatch");
    }
    estimators::DesignMatrix design = estimators::design_matrix(povm, basis);
    Eigen::VectorXd signal_probs = quantum::born_probs(true_state, povm);
    RealMatrix pattern_probs(povm.outcomes(),
                             static_cast<Eigen::Index>(probes.states.size()));
    for (std::size_t alpha = 0; alpha < probes.states.size(); ++alpha) {
        pattern_probs.col(static_cast<Eigen::Index>(alpha)) =
            quantum::born_probs(probes.states[alpha], povm);
    }
    RealMatrix probe_pinv = matlin::pseudoinverse(probes.matrix.columns);
    Eigen::VectorXd true_bloch =
        quantum::bloch_from_state(true_state, basis).coords;
    Eigen::VectorXd true_traceless = true_bloch.tail(true_bloch.size() - 1);
    return TrialSetup{std::move(povm),
                      std::move(true_state),
                      basis,
                      std::move(probes),
                      std::move(design),
                      std::move(signal_probs),
                      std::move(pattern_probs),
                      std::move(probe_pinv),
                      std::move(true_traceless),
                      estimator};
}

namespace detail {

/// Rebuild a physical state from estimated coordinates: the traceless part
/// is kept, the trace coordinate is pinned to 1/sqrt(d), and the result is
/// mapped to the Frobenius-closest density matrix.
inline quantum::DensityMatrix
physical_from_estimate(const Eigen::VectorXd& coords,
                       const quantum::GeneratorBasis& basis) {
    Eigen::VectorXd full = coords;
    full(0) = 1.0 / std::sqrt(static_cast<double>(basis.dim()));
    const quantum::BlochVector v{basis.dim(), std::move(full)};
    return quantum::closest_physical_state(
        quantum::state_from_bloch(v, basis));
}

inline Eigen::VectorXd gls_state_estimate(const RealMatrix& a_s,
                                          const Eigen::VectorXd& f,
                                          std::int64_t n_events) {
    // Covariance model: diag(max(f_j, floor))/N with floor = 1/(10N).
    const double n = static_cast<double>(n_events);
    const double floor_value = 1.0 / (10.0 * n);
    RealMatrix cov = RealMatrix::Zero(f.size(), f.size());
    for (Eigen::Index j = 0; j < f.size(); ++j) {
        cov(j, j) = std::max(f(j), floor_value) / n;
    }
    return estimators::gls(a_s, f, cov);
}

} // namespace detail

/**
 * One repeated data acquisition: fresh Poisson patterns for every probe and
 * a fresh Poisson signal acquisition with the same event budget, followed by
 * the DQST and DPT inversions. Squared errors are taken on the traceless
 * coordinates; fidelities compare the physically projected estimates against
 * the true state.
 */
inline TrialOutcome run_trial(const TrialSetup& setup, std::int64_t n_events,
                              const RngStream& trial_rng,
                              bool retain_design = false) {
    RngStream pattern_rng = trial_rng.derive(stream_tag::kPatterns);
    RngStream signal_rng = trial_rng.derive(stream_tag::kSignal);

    const estimators::PatternMatrix patterns{
        setup.design.m, setup.probes.matrix.M,
        detail::poisson_columns(setup.pattern_probs, n_events, pattern_rng)};
    const Eigen::VectorXd f =
        sample_poisson_frequencies(setup.signal_probs, n_events, signal_rng);

    // DQST: estimate the detector from the patterns, then invert.
    const RealMatrix a_s = patterns.columns * setup.probe_pinv;
    const Eigen::VectorXd r_dqst =
        setup.estimator == EstimatorKind::gls
            ? detail::gls_state_estimate(a_s, f, n_events)
            : estimators::detail::dqst_from_estimated_design(a_s, f);

    // DPT: fit the signal data directly to the patterns.
    const RealMatrix f_pinv = matlin::pseudoinverse(patterns.columns);
    const Eigen::VectorXd r_dpt =
        setup.probes.matrix.columns * (f_pinv * f);

    const auto n_traceless = setup.true_traceless.size();
    TrialOutcome out;
    out.sq_err_dqst =
        (r_dqst.tail(n_traceless) - setup.true_traceless).squaredNorm();
    out.sq_err_dpt =
        (r_dpt.tail(n_traceless) - setup.true_traceless).squaredNorm();
    out.fid_dqst = quantum::sqrt_fidelity(
        detail::physical_from_estimate(r_dqst, setup.basis),
        setup.true_state);
    out.fid_dpt = quantum::sqrt_fidelity(
        detail::physical_from_estimate(r_dpt, setup.basis),
        setup.true_state);
    if (retain_design) {
        out.est_design_dpt = matlin::pseudoinverse(
            (setup.probes.matrix.columns * f_pinv).eval());
    }
    return out;
}

/// Convenience overload building the setup on the fly.
inline TrialOutcome run_trial(const quantum::Povm& povm,
                              const quantum::DensityMatrix& true_state,
                              const ProbeSet& probes,
                              const quantum::GeneratorBasis& basis,
                              std::int64_t n_events, const RngStream& rng,
                              bool retain_design = false) {
    return run_trial(
        make_trial_setup(povm, true_state, probes, basis, EstimatorKind::ols),
        n_events, rng, retain_design);
}

/// Monte Carlo aggregate: means and standard errors of the per-trial
/// scalars, the Cramer-Rao bound of the setup, and (when design matrices
/// were retained) the bias of the mean estimated design with a bootstrap
/// standard error.
struct AggregateResult {
    double mean_sq_err_dqst = 0.0;
    double se_sq_err_dqst = 0.0;
    double mean_sq_err_dpt = 0.0;
    double se_sq_err_dpt = 0.0;
    double mean_fid_dqst = 0.0;
    double se_fid_dqst = 0.0;
    double mean_fid_dpt = 0.0;
    double se_fid_dpt = 0.0;
    double crlb_value = std::numeric_limits<double>::quiet_NaN();
    double bias = std::numeric_limits<double>::quiet_NaN();
    double bias_se = std::numeric_limits<double>::quiet_NaN();
    int trials_used = 0;
    int trials_failed = 0;
};

struct MonteCarloOptions {
    std::int64_t n_events = 1000;
    int trials = 300;
    bool retain_design = false;
    int bootstrap_replicates = 200;
    int workers = 0; // 0 = auto
    BiasNorm bias_norm = BiasNorm::frobenius;
};

inline int resolve_workers(int workers) {
    if (workers > 0) {
        return workers;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

namespace detail {

/// Runs fn(i) for i in [0, count) across the given number of threads with a
/// strided schedule. fn must not throw.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn) {
    const int w = std::min(resolve_workers(workers), std::max(count, 1));
    if (w <= 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) {
        pool.emplace_back([t, w, count, &fn] {
            for (int i = t; i < count; i += w) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

/// Mean of values reduced in ascending order; bit-stable under permutation
/// of the input.
inline double sorted_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

inline std::pair<double, double> sorted_mean_se(std::vector<double> values) {
    const auto n = static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    const double mean = sum / n;
    if (values.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (const double v : values) {
        const double dev = v - mean;
        ss += dev * dev;
    }
    return {mean, std::sqrt(ss / (n * (n - 1.0)))};
}

/// Strict total order on outcomes; used to canonicalize trial order before
/// any resampling. Bit-identical duplicates compare equal, which is
/// harmless because they are interchangeable.
inline bool outcome_less(const TrialOutcome& a, const TrialOutcome& b) {
    if (a.sq_err_dqst != b.sq_err_dqst) {
        return a.sq_err_dqst < b.sq_err_dqst;
    }
    if (a.sq_err_dpt != b.sq_err_dpt) {
        return a.sq_err_dpt < b.sq_err_dpt;
    }
    if (a.fid_dqst != b.fid_dqst) {
        return a.fid_dqst < b.fid_dqst;
    }
    if (a.fid_dpt != b.fid_dpt) {
        return a.fid_dpt < b.fid_dpt;
    }
    if (a.est_design_dpt.has_value() && b.est_design_dpt.has_value()) {
        const auto& ma = *a.est_design_dpt;
        const auto& mb = *b.est_design_dpt;
        for (Eigen::Index i = 0; i < ma.size(); ++i) {
            if (ma(i) != mb(i)) {
                return ma(i) < mb(i);
            }
        }
    }
    return false;
}

/// Entrywise mean of the retained design matrices, each entry reduced in
/// sorted order.
inline RealMatrix sorted_mean_matrix(
    const std::vector<const TrialOutcome*>& outcomes) {
    const RealMatrix& first = *outcomes.front()->est_design_dpt;
    RealMatrix mean(first.rows(), first.cols());
    std::vector<double> samples(outcomes.size());
    for (Eigen::Index i = 0; i < first.size(); ++i) {
        for (std::size_t t = 0; t < outcomes.size(); ++t) {
            samples[t] = (*outcomes[t]->est_design_dpt)(i);
        }
        mean(i) = sorted_mean(samples);
    }
    return mean;
}

inline double bias_norm_of(const RealMatrix& deviation, BiasNorm norm) {
    return norm == BiasNorm::trace ? matlin::trace_norm(deviation)
                                   : matlin::frobenius_norm(deviation);
}

} // namespace detail

/**
 * Order-independent reduction of trial outcomes. When `true_design` is given
 * and the outcomes carry retained design estimates, the bias of their mean
 * and its bootstrap standard error are filled in; `bootstrap_rng` drives the
 * resampling.
 */
inline AggregateResult aggregate(const std::vector<TrialOutcome>& outcomes,
                                 const RealMatrix* true_design = nullptr,
                                 int bootstrap_replicates = 0,
                                 RngStream bootstrap_rng = RngStream(0),
                                 BiasNorm bias_norm = BiasNorm::frobenius) {
    if (outcomes.empty()) {
        throw InvalidInput("aggregate: no outcomes");
    }
    const std::size_t n = outcomes.size();
    std::vector<double> buf(n);
    AggregateResult agg;
    agg.trials_used = static_cast<int>(n);

    const auto collect = [&](auto member) {
        for (std::size_t i = 0; i < n; ++i) {
            buf[i] = outcomes[i].*member;
        }
        return detail::sorted_mean_se(buf);
    };
    std::tie(agg.mean_sq_err_dqst, agg.se_sq_err_dqst) =
        collect(&TrialOutcome::sq_err_dqst);
    std::tie(agg.mean_sq_err_dpt, agg.se_sq_err_dpt) =
        collect(&TrialOutcome::sq_err_dpt);
    std::tie(agg.mean_fid_dqst, agg.se_fid_dqst) =
        collect(&TrialOutcome::fid_dqst);
    std::tie(agg.mean_fid_dpt, agg.se_fid_dpt) =
        collect(&TrialOutcome::fid_dpt);

    const bool have_designs =
        true_design != nullptr &&
        std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) {
            return o.est_design_dpt.has_value();
        });
    if (have_designs) {
        std::vector<const TrialOutcome*> canonical(n);
        for (std::size_t i = 0; i < n; ++i) {
            canonical[i] = &outcomes[i];
        }
        std::sort(canonical.begin(), canonical.end(),
                  [](const TrialOutcome* a, const TrialOutcome* b) {
                      return detail::outcome_less(*a, *b);
                  });
        const RealMatrix mean_design = detail::sorted_mean_matrix(canonical);
        agg.bias =
            detail::bias_norm_of(mean_design - *true_design, bias_norm);

        if (bootstrap_replicates > 1 && n > 1) {
            std::vector<double> replicas(bootstrap_replicates);
            RealMatrix acc(mean_design.rows(), mean_design.cols());
            for (int b = 0; b < bootstrap_replicates; ++b) {
                acc.setZero();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto pick = static_cast<std::size_t>(
                        bootstrap_rng.next_u64() % n);
                    acc += *canonical[pick]->est_design_dpt;
                }
                acc /= static_cast<double>(n);
                replicas[b] =
                    detail::bias_norm_of(acc - *true_design, bias_norm);
            }
            const auto [rep_mean, rep_se] =
                detail::sorted_mean_se(std::move(replicas));
            (void)rep_mean;
            // SE of the bias estimate = std of the bootstrap replicas.
            agg.bias_se =
                rep_se * std::sqrt(static_cast<double>(bootstrap_replicates));
        }
    }
    return agg;
}

/**
 * Runs independent trials (concurrently when workers allow), excludes failed
 * trials, and aggregates. Trial t draws from base_rng.derive(t), so the
 * schedule cannot influence the numbers. Aborts when more than 1% of trials
 * fail.
 */
inline AggregateResult monte_carlo(const TrialSetup& setup,
                                   const MonteCarloOptions& options,
                                   const RngStream& base_rng) {
    if (options.trials < 2) {
        throw InvalidInput("monte_carlo: need at least 2 trials");
    }
    std::vector<std::optional<TrialOutcome>> slots(options.trials);
    std::vector<std::string> failures(options.trials);

    detail::parallel_for(options.trials, options.workers, [&](int t) {
        try {
            slots[t] = run_trial(setup, options.n_events,
                                 base_rng.derive(static_cast<std::uint64_t>(t)),
                                 options.retain_design);
        } catch (const TomoError& e) {
            failures[t] = e.what();
        }
    });

    std::vector<TrialOutcome> outcomes;
    outcomes.reserve(options.trials);
    int failed = 0;
    std::string first_failure;
    for (int t = 0; t < options.trials; ++t) {
        if (slots[t].has_value()) {
            outcomes.push_back(std::move(*slots[t]));
        } else {
            ++failed;
            if (first_failure.empty()) {
                first_failure =
                    "trial " + std::to_string(t) + ": " + failures[t];
            }
        }
    }
    if (failed * 100 > options.trials) {
        throw SimulationAborted("monte_carlo: " + std::to_string(failed) +
                                " of " + std::to_string(options.trials) +
                                " trials failed; first failure: " +
                                first_failure);
    }

    AggregateResult agg = aggregate(
        outcomes, options.retain_design ? &setup.design.full : nullptr,
        options.bootstrap_replicates,
        base_rng.derive(stream_tag::kBootstrap), options.bias_norm);
    agg.trials_failed = failed;
    agg.crlb_value = estimators::crlb(estimators::fisher_matrix(
        setup.design, setup.signal_probs, options.n_events));
    return agg;
}

/**
 * Rejection-samples square-root measurements from Haar ket families until
 * the inverse condition number of the traceless design matrix lands within
 * `window` of `target_inv_cond`. Throws SamplingExhausted with the attempt
 * count and the empirical range seen when max_attempts runs out.
 */
inline std::pair<quantum::Povm, estimators::DesignMatrix>
sample_measurement_with_condition(int d, int m, double target_inv_cond,
                                  double window, std::int64_t max_attempts,
                                  RngStream& rng,
                                  const quantum::GeneratorBasis& basis) {
    if (!(target_inv_cond > 0.0 && target_inv_cond < 1.0)) {
        throw InvalidInput(
            "sample_measurement_with_condition: target must be in (0, 1)");
    }
    if (!(window > 0.0)) {
        throw InvalidInput(
            "sample_measurement_with_condition: window must be > 0");
    }
    if (max_attempts < 1) {
        throw InvalidInput(
            "sample_measurement_with_condition: need max_attempts >= 1");
    }
    double seen_min = std::numeric_limits<double>::infinity();
    double seen_max = -std::numeric_limits<double>::infinity();
    for (std::int64_t attempt = 1; attempt <= max_attempts; ++attempt) {
        std::vector<quantum::Ket> kets;
        kets.reserve(m);
        for (int j = 0; j < m; ++j) {
            kets.push_back(quantum::haar_pure(d, rng));
        }
        std::optional<quantum::Povm> povm;
        try {
            povm.emplace(quantum::square_root_povm(kets));
        } catch (const DegenerateMeasurement&) {
            continue; // rank-deficient Gram matrix, redraw
        }
        estimators::DesignMatrix design =
            estimators::design_matrix(*povm, basis);
        const double kappa =
            matlin::condition_number(design.traceless().eval());
        const double inv_cond = std::isinf(kappa) ? 0.0 : 1.0 / kappa;
        seen_min = std::min(seen_min, inv_cond);
        seen_max = std::max(seen_max, inv_cond);
        if (std::abs(inv_cond - target_inv_cond) <= window) {
            return {std::move(*povm), std::move(design)};
        }
    }
    throw SamplingExhausted(
        "sample_measurement_with_condition: no measurement with 1/kappa "
        "within " +
            std::to_string(window) + " of " +
            std::to_string(target_inv_cond) + " after " +
            std::to_string(max_attempts) + " attempts (seen range [" +
            std::to_string(seen_min) + ", " + std::to_string(seen_max) + "])",
        max_attempts, seen_min, seen_max);
}

} // namespace tomo::sim
