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
 * @file matlin.hpp
 * Dense-matrix numerics shared by every estimator: SVD-based pseudoinverse,
 * condition numbers, norms and PSD functional calculus. All routines are pure
 * functions over Eigen dense matrices and reject NaN/Inf inputs.
 */
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <limits>

#include "tomobench/errors.hpp"

namespace tomo::matlin {

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

/// Relative hermiticity tolerance used by all PSD routines.
inline constexpr double kHermitianTol = 1e-10;

/// Absolute floor under which an eigenvalue counts as "significantly
/// negative" for a nominally PSD input.
inline constexpr double kPsdEigenvalueFloor = -1e-10;

/// Standard SVD truncation heuristic: max(rows, cols) * machine epsilon.
inline double default_svd_rel_tol(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) *
           std::numeric_limits<double>::epsilon();
}

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* who) {
    if (!m.allFinite()) {
        throw InvalidInput(std::string(who) + ": input has NaN/Inf entries");
    }
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
pinv_impl(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
          double rel_tol) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (m.rows() == 0 || m.cols() == 0) {
        throw InvalidInput("pseudoinverse: empty matrix");
    }
    if (rel_tol < 0.0) {
        throw InvalidInput("pseudoinverse: rel_tol must be >= 0");
    }
    require_finite(m, "pseudoinverse");

    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericalFailure("pseudoinverse: SVD did not converge");
    }
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = rel_tol * sv(0);

    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) {
            inv_sv(i) = 1.0 / sv(i);
        }
    }
    return svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();
}

} // namespace detail

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// rel_tol * sigma_max are treated as zero.
inline RealMatrix pseudoinverse(const RealMatrix& m, double rel_tol) {
    return detail::pinv_impl<double>(m, rel_tol);
}

inline RealMatrix pseudoinverse(const RealMatrix& m) {
    return pseudoinverse(m, default_svd_rel_tol(m.rows(), m.cols()));
}

/// Complex variant; identical contract with conjugate transpose in place of
/// the transpose.
inline ComplexMatrix pseudoinverse(const ComplexMatrix& m, double rel_tol) {
    return detail::pinv_impl<std::complex<double>>(m, rel_tol);
}

inline ComplexMatrix pseudoinverse(const ComplexMatrix& m) {
    return pseudoinverse(m, default_svd_rel_tol(m.rows(), m.cols()));
}

/// sigma_max / sigma_min. Returns +infinity when the matrix is rank
/// deficient at rel_tol; throws on an all-zero matrix.
inline double condition_number(const RealMatrix& m, double rel_tol) {
    detail::require_finite(m, "condition_number");
    if (m.rows() == 0 || m.cols() == 0) {
        throw InvalidInput("condition_number: empty matrix");
    }
    Eigen::JacobiSVD<RealMatrix> svd(m);
    if (svd.info() != Eigen::Success) {
        throw NumericalFailure("condition_number: SVD did not converge");
    }
    const Eigen::VectorXd& sv = svd.singularValues();
    const double sigma_max = sv(0);
    if (sigma_max == 0.0) {
        throw InvalidInput("condition_number: zero matrix");
    }
    const double sigma_min = sv(sv.size() - 1);
    if (sigma_min <= rel_tol * sigma_max) {
        return std::numeric_limits<double>::infinity();
    }
    return sigma_max / sigma_min;
}

inline double condition_number(const RealMatrix& m) {
    return condition_number(m, default_svd_rel_tol(m.rows(), m.cols()));
}

/// H^{-1/2} on the support of a Hermitian PSD matrix. Eigenvalues below
/// rel_tol * lambda_max map to zero.
inline ComplexMatrix inv_sqrt_psd(const ComplexMatrix& h, double rel_tol) {
    detail::require_finite(h, "inv_sqrt_psd");
    if (h.rows() != h.cols() || h.rows() == 0) {
        throw InvalidInput("inv_sqrt_psd: matrix must be square and nonempty");
    }
    if (rel_tol < 0.0) {
        throw InvalidInput("inv_sqrt_psd: rel_tol must be >= 0");
    }
    const double hnorm = h.norm();
    if ((h - h.adjoint()).norm() > kHermitianTol * std::max(hnorm, 1.0)) {
        throw InvalidInput("inv_sqrt_psd: input is not Hermitian");
    }
    const ComplexMatrix sym = 0.5 * (h + h.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("inv_sqrt_psd: eigendecomposition failed");
    }
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (lam.minCoeff() < kPsdEigenvalueFloor) {
        throw InvalidInput("inv_sqrt_psd: significantly negative eigenvalue");
    }
    const double lam_max = lam.maxCoeff();
    Eigen::VectorXd f = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) > rel_tol * lam_max && lam(i) > 0.0) {
            f(i) = 1.0 / std::sqrt(lam(i));
        }
    }
    return eig.eigenvectors() * f.asDiagonal() *
           eig.eigenvectors().adjoint();
}

inline ComplexMatrix inv_sqrt_psd(const ComplexMatrix& h) {
    return inv_sqrt_psd(h, default_svd_rel_tol(h.rows(), h.cols()));
}

inline double frobenius_norm(const RealMatrix& m) { return m.norm(); }

inline double frobenius_norm(const ComplexMatrix& m) { return m.norm(); }

/// Trace (nuclear) norm: the sum of singular values.
inline double trace_norm(const RealMatrix& m) {
    detail::require_finite(m, "trace_norm");
    Eigen::JacobiSVD<RealMatrix> svd(m);
    return svd.singularValues().sum();
}

} // namespace tomo::matlin
