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

/// @file selftest.hpp
/// Fast invariant suites behind the `selftest` subcommand. Each suite checks
/// a structural identity of the pipeline end to end and finishes in seconds.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "tomobench/estimators.hpp"
#include "tomobench/matlin.hpp"
#include "tomobench/quantum.hpp"
#include "tomobench/rng.hpp"
#include "tomobench/simulation.hpp"

namespace tomo::selftest {

struct SuiteResult {
    bool ok = true;
    std::string detail;
};

using SuiteFn = std::function<SuiteResult(RngStream&)>;

struct Suite {
    std::string name;
    SuiteFn run;
};

namespace detail {

inline SuiteResult fail(std::string detail) {
    return {false, std::move(detail)};
}

inline sim::ProbeSet random_probes(int d, int count,
                                   const quantum::GeneratorBasis& basis,
                                   RngStream& rng) {
    return sim::generate_probe_set(d, count, 0.0, rng, basis);
}

inline SuiteResult eq8_equivalence(RngStream& rng) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int d = (rep % 2 == 0) ? 2 : 3;
        const int n_full = d * d;
        const int m = n_full + 1 + rep % 4;
        const quantum::GeneratorBasis basis = quantum::gell_mann_basis(d);
        RngStream sub = rng.derive(rep);
        std::vector<quantum::Ket> kets;
        for (int j = 0; j < m; ++j) {
            kets.push_back(quantum::haar_pure(d, sub));
        }
        const quantum::Povm povm = quantum::square_root_povm(kets);
        sim::ProbeSet probes = random_probes(d, n_full, basis, sub);
        const quantum::DensityMatrix state = quantum::depolarize(
            quantum::pure_state(quantum::haar_pure(d, sub)), 0.05);
        const sim::TrialSetup setup = sim::make_trial_setup(
            povm, state, std::move(probes), basis, sim::EstimatorKind::ols);

        for (const bool noisy : {false, true}) {
            estimators::PatternMatrix patterns{m, n_full,
                                               setup.pattern_probs};
            Eigen::VectorXd f = setup.signal_probs;
            if (noisy) {
                RngStream noise = sub.derive(noisy);
                patterns.columns = sim::detail::poisson_columns(
                    setup.pattern_probs, 800, noise);
                f = sim::sample_poisson_frequencies(setup.signal_probs, 800,
                                                    noise);
            }
            if (!std::isfinite(matlin::condition_number(patterns.columns)) ||
                !std::isfinite(
                    matlin::condition_number(setup.probes.matrix.columns))) {
                continue; // full column rank is a precondition of the identity
            }
            const Eigen::VectorXd r_s =
                estimators::dqst_estimate(patterns, setup.probes.matrix, f);
            const Eigen::VectorXd r_p =
                estimators::dpt_estimate(setup.probes.matrix, patterns, f);
            worst = std::max(worst,
                             (r_s - r_p).cwiseAbs().maxCoeff());
        }
    }
    if (worst > 1e-8) {
        std::ostringstream msg;
        msg << "max deviation " << worst << " > 1e-8";
        return fail(msg.str());
    }
    std::ostringstream msg;
    msg << "max deviation " << worst;
    return {true, msg.str()};
}

inline SuiteResult penrose_pseudoinverse(RngStream& rng) {
    for (int rep = 0; rep < 12; ++rep) {
        const int rows = 2 + static_cast<int>(rng.next_u64() % 7);
        const int cols = 2 + static_cast<int>(rng.next_u64() % 7);
        matlin::RealMatrix m(rows, cols);
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                m(i, j) = rng.gaussian();
            }
        }
        if (rep % 3 == 0 && rows > 2) {
            m.row(rows - 1) = m.row(0); // force rank deficiency sometimes
        }
        const matlin::RealMatrix p = matlin::pseudoinverse(m);
        const double scale = m.norm();
        if ((m * p * m - m).norm() > 1e-9 * scale ||
            (p * m * p - p).norm() > 1e-9 * std::max(p.norm(), 1.0) ||
            ((m * p) - (m * p).transpose().eval()).norm() > 1e-9 ||
            ((p * m) - (p * m).transpose().eval()).norm() > 1e-9) {
            return fail("Penrose conditions violated");
        }
    }
    return {true, "12 random matrices"};
}

inline SuiteResult povm_completeness(RngStream& rng) {
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<quantum::Ket> kets;
        for (int j = 0; j < 40; ++j) {
            kets.push_back(quantum::haar_pure(6, rng));
        }
        const quantum::Povm povm = quantum::square_root_povm(kets);
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(6, 6);
        for (const auto& e : povm.elements()) {
            sum += e;
        }
        if ((sum - Eigen::MatrixXcd::Identity(6, 6)).cwiseAbs().maxCoeff() >
            1e-10) {
            return fail("completeness defect above 1e-10");
        }
    }
    return {true, "10 square-root measurements, d=6, m=40"};
}

inline SuiteResult bloch_roundtrip(RngStream& rng) {
    for (int d = 2; d <= 6; ++d) {
        const quantum::GeneratorBasis basis = quantum::gell_mann_basis(d);
        const quantum::DensityMatrix rho = quantum::depolarize(
            quantum::pure_state(quantum::haar_pure(d, rng)), 0.2);
        const quantum::BlochVector v = quantum::bloch_from_state(rho, basis);
        const Eigen::MatrixXcd back = quantum::state_from_bloch(v, basis);
        if ((back - rho.matrix()).cwiseAbs().maxCoeff() > 1e-12) {
            return fail("round trip above 1e-12 at d=" + std::to_string(d));
        }
    }
    return {true, "d = 2..6"};
}

inline SuiteResult born_design_consistency(RngStream& rng) {
    for (int d = 2; d <= 4; ++d) {
        const quantum::GeneratorBasis basis = quantum::gell_mann_basis(d);
        std::vector<quantum::Ket> kets;
        for (int j = 0; j < d * d + 2; ++j) {
            kets.push_back(quantum::haar_pure(d, rng));
        }
        const quantum::Povm povm = quantum::square_root_povm(kets);
        const estimators::DesignMatrix a =
            estimators::design_matrix(povm, basis);
        const quantum::DensityMatrix rho = quantum::depolarize(
            quantum::pure_state(quantum::haar_pure(d, rng)), 0.1);
        const Eigen::VectorXd lhs =
            a.full * quantum::bloch_from_state(rho, basis).coords;
        const Eigen::VectorXd rhs = quantum::born_probs(rho, povm);
        if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-10) {
            return fail("p != A r at d=" + std::to_string(d));
        }
    }
    return {true, "p = A r for d = 2..4"};
}

inline SuiteResult fisher_crlb_scaling(RngStream& rng) {
    const quantum::GeneratorBasis basis = quantum::gell_mann_basis(3);
    std::vector<quantum::Ket> kets;
    for (int j = 0; j < 12; ++j) {
        kets.push_back(quantum::haar_pure(3, rng));
    }
    const quantum::Povm povm = quantum::square_root_povm(kets);
    const quantum::DensityMatrix rho = quantum::depolarize(
        quantum::pure_state(quantum::haar_pure(3, rng)), 0.1);
    const estimators::DesignMatrix a = estimators::design_matrix(povm, basis);
    const Eigen::VectorXd p = quantum::born_probs(rho, povm);
    const auto f1 = estimators::fisher_matrix(a, p, 750);
    const auto f2 = estimators::fisher_matrix(a, p, 1500);
    if (f2.matrix() != (2.0 * f1.matrix()).eval()) {
        return fail("Fisher matrix not exactly linear in N");
    }
    if (estimators::crlb(f2) != estimators::crlb(f1) / 2.0) {
        return fail("crlb(2N) != crlb(N)/2 exactly");
    }
    return {true, "exact N-scaling"};
}

inline SuiteResult projection_physics(RngStream& rng) {
    const quantum::GeneratorBasis basis = quantum::gell_mann_basis(4);
    const quantum::DensityMatrix rho = quantum::depolarize(
        quantum::pure_state(quantum::haar_pure(4, rng)), 0.3);
    const quantum::DensityMatrix again =
        quantum::project_to_physical(rho.matrix());
    if ((again.matrix() - rho.matrix()).cwiseAbs().maxCoeff() > 1e-12) {
        return fail("projection moved a physical state");
    }
    Eigen::MatrixXcd h = rho.matrix();
    h(0, 0) += 0.4;
    h(1, 1) -= 0.4;
    const quantum::DensityMatrix once = quantum::project_to_physical(h);
    const quantum::DensityMatrix twice =
        quantum::project_to_physical(once.matrix());
    if ((twice.matrix() - once.matrix()).cwiseAbs().maxCoeff() > 1e-12) {
        return fail("projection is not idempotent");
    }
    return {true, "fixed point and idempotence"};
}

} // namespace detail

inline std::vector<Suite> suites() {
    return {
        {"eq8-equivalence", detail::eq8_equivalence},
        {"penrose-pseudoinverse", detail::penrose_pseudoinverse},
        {"povm-completeness", detail::povm_completeness},
        {"bloch-roundtrip", detail::bloch_roundtrip},
        {"born-design-consistency", detail::born_design_consistency},
        {"fisher-crlb-scaling", detail::fisher_crlb_scaling},
        {"projection-physics", detail::projection_physics},
    };
}

/// Runs every suite, prints one pass/fail line each, returns the number of
/// failures.
inline int run_all(std::uint64_t seed) {
    int failures = 0;
    for (const auto& suite : suites()) {
        RngStream rng = RngStream(seed).derive(
            std::hash<std::string>{}(suite.name));
        const auto start = std::chrono::steady_clock::now();
        SuiteResult result;
        try {
            result = suite.run(rng);
        } catch (const std::exception& e) {
            result = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          start)
                .count();
        std::printf("[%s] %s (%s, %.2f s)\n", result.ok ? "PASS" : "FAIL",
                    suite.name.c_str(), result.detail.c_str(), elapsed);
        if (!result.ok) {
            ++failures;
        }
    }
    return failures;
}

} // namespace tomo::selftest
