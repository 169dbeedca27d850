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
 * @file estimators.hpp
 * Linear-inversion tomography estimators and their resolution limits.
 *
 * Everything works in the augmented d^2-coordinate system (see quantum.hpp):
 * the design matrix A maps full Bloch vectors to outcome probabilities, the
 * probe matrix R stacks probe Bloch vectors columnwise, the pattern matrix F
 * stacks the measured probe responses. The two strategies compared are
 *
 *   detector-assisted (DQST):  A_s = F R+,   r_s = (F R+)+ f
 *   data-pattern      (DPT):   x   = F+ f,   r_p = R F+ f
 *
 * with + the Moore-Penrose pseudoinverse. Fisher information and the
 * Cramer-Rao bound refer to independent Poisson counts per outcome and are
 * expressed on the traceless coordinates only.
 */
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>

#include "tomobench/errors.hpp"
#include "tomobench/matlin.hpp"
#include "tomobench/quantum.hpp"

namespace tomo::estimators {

using matlin::RealMatrix;

/// Probability floor guarding the 1/p Fisher weights.
inline constexpr double kFisherProbFloor = 1e-12;

/// m x d^2 real matrix with A(j,k) = Re Tr(Pi_j G_k). Column 0 carries the
/// identity components (Tr Pi_j)/sqrt(d); columns 1..d^2-1 are the traceless
/// block used for error metrics and Fisher information.
struct DesignMatrix {
    int m = 0;
    int d = 0;
    RealMatrix full;

    auto traceless() const { return full.rightCols(full.cols() - 1); }
};

/// Known probe states, Bloch vectors stacked columnwise (d^2 x M).
struct ProbeMatrix {
    int d = 0;
    int M = 0;
    RealMatrix columns;
};

/// Measured probe responses ("patterns"), frequency vectors stacked
/// columnwise (m x M).
struct PatternMatrix {
    int m = 0;
    int M = 0;
    RealMatrix columns;
};

/// Fisher information for a Poisson counting experiment. Stored per event;
/// matrix() scales it by the event budget, so doubling n_events doubles the
/// matrix exactly.
struct FisherMatrix {
    RealMatrix per_event;
    std::int64_t n_events = 1;

    RealMatrix matrix() const {
        return per_event * static_cast<double>(n_events);
    }
};

inline DesignMatrix design_matrix(const quantum::Povm& povm,
                                  const quantum::GeneratorBasis& basis) {
    if (povm.dim() != basis.dim()) {
        throw InvalidInput("design_matrix: dimension mismatch");
    }
    const int m = povm.outcomes();
    const int n_full = basis.size();
    RealMatrix a(m, n_full);
    for (int j = 0; j < m; ++j) {
        for (int k = 0; k < n_full; ++k) {
            a(j, k) = quantum::real_trace_product(povm.element(j),
                                                  basis.element(k));
        }
    }
    return DesignMatrix{m, basis.dim(), std::move(a)};
}

/// Ordinary least squares, r = A+ f.
inline Eigen::VectorXd ols(const RealMatrix& a, const Eigen::VectorXd& f) {
    if (a.rows() != f.size()) {
        throw InvalidInput("ols: row count does not match data length");
    }
    return matlin::pseudoinverse(a) * f;
}

inline Eigen::VectorXd ols(const DesignMatrix& a, const Eigen::VectorXd& f) {
    return ols(a.full, f);
}

/// Generalized least squares, r = (C^-1 A)+ C^-1 f with cov = C C^T.
/// The covariance must be symmetric and Cholesky-factorable; a one-shot
/// diagonal jitter is applied before giving up.
inline Eigen::VectorXd gls(const RealMatrix& a, const Eigen::VectorXd& f,
                           const RealMatrix& cov) {
    if (a.rows() != f.size() || cov.rows() != cov.cols() ||
        cov.rows() != a.rows()) {
        throw InvalidInput("gls: shape mismatch");
    }
    matlin::detail::require_finite(cov, "gls");
    if ((cov - cov.transpose()).norm() >
        1e-10 * std::max(cov.norm(), 1.0)) {
        throw InvalidInput("gls: covariance is not symmetric");
    }
    Eigen::LLT<RealMatrix> llt(cov);
    if (llt.info() != Eigen::Success) {
        const double jitter =
            1e-12 * std::max(cov.diagonal().maxCoeff(), 1.0);
        RealMatrix regularized = cov;
        regularized.diagonal().array() += jitter;
        llt.compute(regularized);
        if (llt.info() != Eigen::Success) {
            throw InvalidInput("gls: covariance is not positive definite");
        }
    }
    const auto chol = llt.matrixL();
    const RealMatrix wa = chol.solve(a);
    const Eigen::VectorXd wf = chol.solve(f);
    return matlin::pseudoinverse(wa) * wf;
}

/// Detector tomography step: the estimated design matrix A_s = F R+.
inline RealMatrix qdt(const PatternMatrix& f_mat, const ProbeMatrix& r_mat) {
    if (f_mat.M != r_mat.M) {
        throw InvalidInput("qdt: probe counts differ");
    }
    return f_mat.columns * matlin::pseudoinverse(r_mat.columns);
}

namespace detail {

inline Eigen::VectorXd dqst_from_estimated_design(const RealMatrix& a_s,
                                                  const Eigen::VectorXd& f) {
    if (a_s.rows() != f.size()) {
        throw InvalidInput("dqst_estimate: data length mismatch");
    }
    return matlin::pseudoinverse(a_s) * f;
}

} // namespace detail

/// Two-step DQST estimate r_s = (F R+)+ f.
inline Eigen::VectorXd dqst_estimate(const PatternMatrix& f_mat,
                                     const ProbeMatrix& r_mat,
                                     const Eigen::VectorXd& f) {
    return detail::dqst_from_estimated_design(qdt(f_mat, r_mat), f);
}

/// Pattern-fit coefficients x = F+ f, the minimum-norm least-squares
/// solution of F x ~ f.
inline Eigen::VectorXd dpt_coefficients(const PatternMatrix& f_mat,
                                        const Eigen::VectorXd& f) {
    if (f_mat.m != f.size()) {
        throw InvalidInput("dpt_coefficients: data length mismatch");
    }
    return matlin::pseudoinverse(f_mat.columns) * f;
}

/// DPT estimate r_p = R F+ f, the probe combination fitted to the data.
inline Eigen::VectorXd dpt_estimate(const ProbeMatrix& r_mat,
                                    const PatternMatrix& f_mat,
                                    const Eigen::VectorXd& f) {
    if (f_mat.M != r_mat.M) {
        throw InvalidInput("dpt_estimate: probe counts differ");
    }
    return r_mat.columns * dpt_coefficients(f_mat, f);
}

/// Effective measurement matrix of DPT, A_p = (R F+)+.
inline RealMatrix effective_dpt_design(const ProbeMatrix& r_mat,
                                       const PatternMatrix& f_mat) {
    if (f_mat.M != r_mat.M) {
        throw InvalidInput("effective_dpt_design: probe counts differ");
    }
    return matlin::pseudoinverse(
        (r_mat.columns * matlin::pseudoinverse(f_mat.columns)).eval());
}

/// Fisher information for independent Poisson counts, N A^T diag(1/p) A on
/// the traceless columns. Any outcome probability at or below the floor
/// makes the 1/p weight meaningless and raises SingularStatistics.
inline FisherMatrix fisher_matrix(const DesignMatrix& a,
                                  const Eigen::VectorXd& p,
                                  std::int64_t n_events) {
    if (p.size() != a.m) {
        throw InvalidInput("fisher_matrix: probability count mismatch");
    }
    if (n_events < 1) {
        throw InvalidInput("fisher_matrix: event budget must be >= 1");
    }
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (!(p(j) > kFisherProbFloor)) {
            throw SingularStatistics(
                "fisher_matrix: outcome probability at or below floor");
        }
    }
    const auto at = a.traceless();
    RealMatrix per_event =
        at.transpose() * p.cwiseInverse().asDiagonal() * at;
    per_event = 0.5 * (per_event + per_event.transpose().eval());
    return FisherMatrix{std::move(per_event), n_events};
}

/// Cramer-Rao lower bound Tr(F^-1) on the traceless mean square error.
/// Refuses singular Fisher matrices outright; pseudoinverting one would
/// silently drop the unidentified directions.
inline double crlb(const FisherMatrix& fisher) {
    const RealMatrix& per_event = fisher.per_event;
    if (per_event.rows() != per_event.cols() || per_event.rows() == 0) {
        throw InvalidInput("crlb: Fisher matrix must be square");
    }
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(per_event,
                                                  Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("crlb: eigendecomposition failed");
    }
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double lam_max = lam.maxCoeff();
    const double cutoff =
        matlin::default_svd_rel_tol(per_event.rows(), per_event.cols()) *
        std::max(lam_max, 0.0);
    double trace_inv = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) <= cutoff) {
            throw InformationallyIncomplete(
                "crlb: singular Fisher matrix (measurement is not "
                "informationally complete)");
        }
        trace_inv += 1.0 / lam(i);
    }
    // Dividing by the event count here keeps crlb(2N) = crlb(N)/2 exact.
    return trace_inv / static_cast<double>(fisher.n_events);
}

} // namespace tomo::estimators
