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
 * @file quantum.hpp
 * Quantum-state and measurement primitives: the orthonormal Hermitian
 * generator basis, Haar-random pure states, square-root POVMs, Born
 * probabilities, Bloch coordinates and fidelity.
 *
 * Conventions pinned here and relied on everywhere else:
 *  - The generator basis is the generalized Gell-Mann family normalized to
 *    Tr(G_k G_l) = delta_kl, ordered as all symmetric off-diagonal pairs in
 *    lexicographic (row, col) order, then all antisymmetric pairs in the same
 *    order, then the diagonal family, with G_0 = I/sqrt(d) prepended.
 *  - Bloch vectors are AUGMENTED: index 0 carries the identity component
 *    (1/sqrt(d) for unit-trace operators), indices 1..d^2-1 the traceless
 *    part. Probabilities then satisfy p = A r with no affine offset.
 */
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tomobench/errors.hpp"
#include "tomobench/matlin.hpp"
#include "tomobench/rng.hpp"

namespace tomo::quantum {

using matlin::ComplexMatrix;
using Complex = std::complex<double>;

/// Orthonormal Hermitian operator basis {G_0 = I/sqrt(d), G_1, ..., G_{d^2-1}}
/// with G_k traceless for k >= 1.
class GeneratorBasis {
  public:
    GeneratorBasis(int dim, std::vector<ComplexMatrix> elements)
        : dim_(dim), elems_(std::move(elements)) {
        validate();
    }

    int dim() const { return dim_; }

    /// Number of basis elements, d^2 (index 0 included).
    int size() const { return static_cast<int>(elems_.size()); }

    const ComplexMatrix& element(int k) const { return elems_[k]; }

  private:
    void validate() const {
        const auto d = static_cast<Eigen::Index>(dim_);
        if (dim_ < 2 ||
            elems_.size() != static_cast<std::size_t>(dim_) * dim_) {
            throw InvalidInput("GeneratorBasis: need d^2 elements, d >= 2");
        }
        const ComplexMatrix gamma0 =
            ComplexMatrix::Identity(d, d) / std::sqrt(static_cast<double>(d));
        if ((elems_[0] - gamma0).norm() != 0.0) {
            throw InvalidInput("GeneratorBasis: element 0 must be I/sqrt(d)");
        }
        for (std::size_t k = 0; k < elems_.size(); ++k) {
            if (elems_[k].rows() != d || elems_[k].cols() != d) {
                throw InvalidInput("GeneratorBasis: wrong element shape");
            }
            if (k >= 1 && std::abs(elems_[k].trace()) > 1e-12) {
                throw InvalidInput("GeneratorBasis: element not traceless");
            }
            for (std::size_t l = 0; l <= k; ++l) {
                const Complex g =
                    (elems_[k].adjoint() * elems_[l]).trace();
                const double target = (k == l) ? 1.0 : 0.0;
                if (std::abs(g - target) > 1e-12) {
                    throw InvalidInput("GeneratorBasis: not orthonormal");
                }
            }
        }
    }

    int dim_;
    std::vector<ComplexMatrix> elems_;
};

/// Generalized Gell-Mann basis for SU(d), normalized and augmented with
/// G_0 = I/sqrt(d). For d=2 this is {I, sigma_x, sigma_y, sigma_z}/sqrt(2).
inline GeneratorBasis gell_mann_basis(int d) {
    if (d < 2) {
        throw InvalidInput("gell_mann_basis: dimension must be >= 2");
    }
    const auto n = static_cast<Eigen::Index>(d);
    std::vector<ComplexMatrix> elems;
    elems.reserve(static_cast<std::size_t>(d) * d);

    elems.push_back(ComplexMatrix::Identity(n, n) /
                    std::sqrt(static_cast<double>(d)));

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) {
            ComplexMatrix sym = ComplexMatrix::Zero(n, n);
            sym(j, k) = inv_sqrt2;
            sym(k, j) = inv_sqrt2;
            elems.push_back(std::move(sym));
        }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) {
            ComplexMatrix anti = ComplexMatrix::Zero(n, n);
            anti(j, k) = Complex(0.0, -inv_sqrt2);
            anti(k, j) = Complex(0.0, inv_sqrt2);
            elems.push_back(std::move(anti));
        }
    }
    for (Eigen::Index l = 1; l < n; ++l) {
        ComplexMatrix diag = ComplexMatrix::Zero(n, n);
        const double norm =
            1.0 / std::sqrt(static_cast<double>(l) * (l + 1.0));
        for (Eigen::Index i = 0; i < l; ++i) {
            diag(i, i) = norm;
        }
        diag(l, l) = -static_cast<double>(l) * norm;
        elems.push_back(std::move(diag));
    }
    return GeneratorBasis(d, std::move(elems));
}

/// Unit-norm pure state.
class Ket {
  public:
    explicit Ket(Eigen::VectorXcd amplitudes) : amp_(std::move(amplitudes)) {
        if (amp_.size() < 2 || !amp_.allFinite()) {
            throw InvalidInput("Ket: need >= 2 finite amplitudes");
        }
        if (std::abs(amp_.norm() - 1.0) > 1e-12) {
            throw InvalidInput("Ket: amplitudes must have unit norm");
        }
    }

    int dim() const { return static_cast<int>(amp_.size()); }
    const Eigen::VectorXcd& amplitudes() const { return amp_; }

  private:
    Eigen::VectorXcd amp_;
};

/// d x d complex matrix that is Hermitian, unit trace and PSD (to tolerance).
class DensityMatrix {
  public:
    explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {
        if (mat_.rows() != mat_.cols() || mat_.rows() < 2 ||
            !mat_.allFinite()) {
            throw InvalidInput("DensityMatrix: need a finite square matrix");
        }
        const double scale = std::max(mat_.norm(), 1.0);
        if ((mat_ - mat_.adjoint()).norm() > 1e-10 * scale) {
            throw InvalidInput("DensityMatrix: not Hermitian");
        }
        if (std::abs(mat_.trace() - Complex(1.0, 0.0)) > 1e-10) {
            throw InvalidInput("DensityMatrix: trace must be 1");
        }
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(mat_,
                                                         Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success) {
            throw NumericalFailure("DensityMatrix: eigendecomposition failed");
        }
        if (eig.eigenvalues().minCoeff() < matlin::kPsdEigenvalueFloor) {
            throw InvalidInput("DensityMatrix: negative eigenvalue");
        }
    }

    int dim() const { return static_cast<int>(mat_.rows()); }
    const ComplexMatrix& matrix() const { return mat_; }

  private:
    ComplexMatrix mat_;
};

/// Ordered POVM {Pi_j}: Hermitian PSD elements summing to the identity.
class Povm {
  public:
    explicit Povm(std::vector<ComplexMatrix> elements)
        : elems_(std::move(elements)) {
        if (elems_.empty()) {
            throw InvalidInput("Povm: need at least one element");
        }
        const Eigen::Index d = elems_[0].rows();
        ComplexMatrix sum = ComplexMatrix::Zero(d, d);
        for (const auto& e : elems_) {
            if (e.rows() != d || e.cols() != d || !e.allFinite()) {
                throw InvalidInput("Povm: element shape mismatch");
            }
            const double scale = std::max(e.norm(), 1.0);
            if ((e - e.adjoint()).norm() > 1e-10 * scale) {
                throw InvalidInput("Povm: element not Hermitian");
            }
            Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(
                e, Eigen::EigenvaluesOnly);
            if (eig.eigenvalues().minCoeff() < matlin::kPsdEigenvalueFloor) {
                throw InvalidInput("Povm: element has a negative eigenvalue");
            }
            sum += e;
        }
        if ((sum - ComplexMatrix::Identity(d, d)).cwiseAbs().maxCoeff() >
            1e-10) {
            throw InvalidInput("Povm: elements do not sum to the identity");
        }
    }

    int dim() const { return static_cast<int>(elems_[0].rows()); }
    int outcomes() const { return static_cast<int>(elems_.size()); }
    const ComplexMatrix& element(int j) const { return elems_[j]; }
    const std::vector<ComplexMatrix>& elements() const { return elems_; }

  private:
    std::vector<ComplexMatrix> elems_;
};

/// Augmented Bloch coordinates: coords[0] is the identity component,
/// coords[1..d^2-1] the traceless part.
struct BlochVector {
    int dim;
    Eigen::VectorXd coords;
};

/// Ket drawn from the Haar (unitarily invariant) measure: a vector of i.i.d.
/// standard complex Gaussians, normalized.
inline Ket haar_pure(int d, RngStream& rng) {
    if (d < 2) {
        throw InvalidInput("haar_pure: dimension must be >= 2");
    }
    Eigen::VectorXcd v(d);
    for (int i = 0; i < d; ++i) {
        v(i) = rng.complex_gaussian();
    }
    double norm = v.norm();
    while (norm == 0.0) { // probability zero, but keep the contract total
        for (int i = 0; i < d; ++i) {
            v(i) = rng.complex_gaussian();
        }
        norm = v.norm();
    }
    return Ket(v / norm);
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the standard
/// phase fix.
inline ComplexMatrix haar_unitary(int d, RngStream& rng) {
    if (d < 2) {
        throw InvalidInput("haar_unitary: dimension must be >= 2");
    }
    ComplexMatrix g(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            g(i, j) = rng.complex_gaussian();
        }
    }
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ();
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
        const Complex rjj = r(j, j);
        const double a = std::abs(rjj);
        q.col(j) *= (a == 0.0) ? Complex(1.0, 0.0) : rjj / a;
    }
    return q;
}

/// (1 - lambda) rho + lambda I/d.
inline DensityMatrix depolarize(const DensityMatrix& rho, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidInput("depolarize: lambda must be in [0, 1]");
    }
    const auto d = static_cast<Eigen::Index>(rho.dim());
    ComplexMatrix out = (1.0 - lambda) * rho.matrix() +
                        (lambda / static_cast<double>(d)) *
                            ComplexMatrix::Identity(d, d);
    return DensityMatrix(std::move(out));
}

inline DensityMatrix pure_state(const Ket& psi) {
    return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

/// Square-root POVM Pi_j = G^{-1/2} |phi_j><phi_j| G^{-1/2} with
/// G = sum_j |phi_j><phi_j|. Throws DegenerateMeasurement when G is rank
/// deficient at rel_tol (the caller may redraw the kets).
inline Povm square_root_povm(const std::vector<Ket>& kets, double rel_tol) {
    if (kets.empty()) {
        throw InvalidInput("square_root_povm: need at least one ket");
    }
    const auto d = static_cast<Eigen::Index>(kets[0].dim());
    ComplexMatrix gram = ComplexMatrix::Zero(d, d);
    for (const auto& k : kets) {
        if (k.dim() != d) {
            throw InvalidInput("square_root_povm: kets of unequal dimension");
        }
        gram.noalias() += k.amplitudes() * k.amplitudes().adjoint();
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(gram,
                                                     Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("square_root_povm: eigendecomposition failed");
    }
    if (eig.eigenvalues().minCoeff() <=
        rel_tol * eig.eigenvalues().maxCoeff()) {
        throw DegenerateMeasurement(
            "square_root_povm: Gram matrix is rank deficient");
    }
    const ComplexMatrix g_inv_sqrt = matlin::inv_sqrt_psd(gram, rel_tol);
    std::vector<ComplexMatrix> elems;
    elems.reserve(kets.size());
    for (const auto& k : kets) {
        const Eigen::VectorXcd w = g_inv_sqrt * k.amplitudes();
        elems.push_back(w * w.adjoint());
    }
    return Povm(std::move(elems));
}

inline Povm square_root_povm(const std::vector<Ket>& kets) {
    const auto d =
        kets.empty() ? 1 : static_cast<Eigen::Index>(kets[0].dim());
    return square_root_povm(kets, matlin::default_svd_rel_tol(d, d));
}

/// Re Tr(a b) for Hermitian a, b.
inline double real_trace_product(const ComplexMatrix& a,
                                 const ComplexMatrix& b) {
    return a.cwiseProduct(b.transpose()).sum().real();
}

/// coords[k] = Tr(rho G_k); coords[0] comes out as 1/sqrt(d).
inline BlochVector bloch_from_state(const DensityMatrix& rho,
                                    const GeneratorBasis& basis) {
    if (rho.dim() != basis.dim()) {
        throw InvalidInput("bloch_from_state: dimension mismatch");
    }
    Eigen::VectorXd coords(basis.size());
    for (int k = 0; k < basis.size(); ++k) {
        coords(k) = real_trace_product(rho.matrix(), basis.element(k));
    }
    return BlochVector{rho.dim(), std::move(coords)};
}

/// sum_k coords[k] G_k. Hermitian by construction but NOT guaranteed PSD;
/// returned as a raw matrix, not a DensityMatrix.
inline ComplexMatrix state_from_bloch(const BlochVector& v,
                                      const GeneratorBasis& basis) {
    if (v.dim != basis.dim() || v.coords.size() != basis.size()) {
        throw InvalidInput("state_from_bloch: dimension mismatch");
    }
    const auto d = static_cast<Eigen::Index>(basis.dim());
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (int k = 0; k < basis.size(); ++k) {
        out += v.coords(k) * basis.element(k);
    }
    return out;
}

/// Born probabilities p_j = Re Tr(rho Pi_j), with rounding-level negatives
/// clipped to zero.
inline Eigen::VectorXd born_probs(const DensityMatrix& rho, const Povm& povm) {
    if (rho.dim() != povm.dim()) {
        throw InvalidInput("born_probs: dimension mismatch");
    }
    Eigen::VectorXd p(povm.outcomes());
    for (int j = 0; j < povm.outcomes(); ++j) {
        p(j) = std::max(real_trace_product(rho.matrix(), povm.element(j)),
                        0.0);
    }
    return p;
}

namespace detail {

/// U f(D) U^dagger for a Hermitian matrix, eigenvalues mapped through f.
template <typename F>
ComplexMatrix hermitian_function(const ComplexMatrix& h, F&& f) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(h);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("hermitian_function: eigensolver failed");
    }
    Eigen::VectorXd mapped = eig.eigenvalues();
    for (Eigen::Index i = 0; i < mapped.size(); ++i) {
        mapped(i) = f(mapped(i));
    }
    return eig.eigenvectors() * mapped.asDiagonal() *
           eig.eigenvectors().adjoint();
}

} // namespace detail

namespace detail {

/// Tr sqrt(sqrt(rho) sigma sqrt(rho)), the Uhlmann overlap.
inline double uhlmann_trace(const DensityMatrix& rho,
                            const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) {
        throw InvalidInput("fidelity: dimension mismatch");
    }
    const ComplexMatrix sqrt_rho = hermitian_function(
        rho.matrix(),
        [](double x) { return x > 0.0 ? std::sqrt(x) : 0.0; });
    ComplexMatrix t = sqrt_rho * sigma.matrix() * sqrt_rho;
    t = 0.5 * (t + t.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(t,
                                                     Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure("fidelity: eigensolver failed");
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double lam = eig.eigenvalues()(i);
        if (lam > 0.0) {
            sum += std::sqrt(lam);
        }
    }
    return sum;
}

} // namespace detail

/// Uhlmann-Jozsa fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
    const double t = detail::uhlmann_trace(rho, sigma);
    return std::min(t * t, 1.0);
}

/// Square-root convention, Tr sqrt(sqrt(rho) sigma sqrt(rho)); this is the
/// quantity tabulated by the experiment reports.
inline double sqrt_fidelity(const DensityMatrix& rho,
                            const DensityMatrix& sigma) {
    return std::min(detail::uhlmann_trace(rho, sigma), 1.0);
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<ComplexMatrix>
symmetrized_eigensolver(const ComplexMatrix& h, const char* who) {
    if (h.rows() != h.cols() || h.rows() < 2 || !h.allFinite()) {
        throw InvalidInput(std::string(who) +
                           ": need a finite square matrix");
    }
    if ((h - h.adjoint()).norm() > 1e-8 * std::max(h.norm(), 1.0)) {
        throw InvalidInput(std::string(who) + ": input is not Hermitian");
    }
    const ComplexMatrix sym = 0.5 * (h + h.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(sym);
    if (eig.info() != Eigen::Success) {
        throw NumericalFailure(std::string(who) + ": eigensolver failed");
    }
    return eig;
}

} // namespace detail

/// Clip-and-renormalize map onto physical states: symmetrize, clip negative
/// eigenvalues to zero, renormalize the trace to one.
inline DensityMatrix project_to_physical(const ComplexMatrix& h) {
    const auto eig =
        detail::symmetrized_eigensolver(h, "project_to_physical");
    Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(0.0);
    const double total = lam.sum();
    if (total <= 0.0) {
        throw DegenerateProjection(
            "project_to_physical: no positive eigenvalue");
    }
    lam /= total;
    return DensityMatrix(eig.eigenvectors() * lam.asDiagonal() *
                         eig.eigenvectors().adjoint());
}

/// Frobenius-closest density matrix: Euclidean projection of the spectrum
/// onto the probability simplex (subtract a common shift, clip at zero).
/// Unlike the clip-and-renormalize map it never rescales the dominant
/// eigenvalues, which matters when fidelities are compared.
inline DensityMatrix closest_physical_state(const ComplexMatrix& h) {
    const auto eig =
        detail::symmetrized_eigensolver(h, "closest_physical_state");
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const auto n = lam.size();
    std::vector<double> desc(lam.data(), lam.data() + n);
    std::sort(desc.begin(), desc.end(), std::greater<double>());
    double cumulative = 0.0;
    double shift = desc[0] - 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumulative += desc[k];
        const double candidate =
            (cumulative - 1.0) / static_cast<double>(k + 1);
        if (desc[k] - candidate > 0.0) {
            shift = candidate;
        }
    }
    Eigen::VectorXd projected = (lam.array() - shift).cwiseMax(0.0);
    projected /= projected.sum();
    return DensityMatrix(eig.eigenvectors() * projected.asDiagonal() *
                         eig.eigenvectors().adjoint());
}

} // namespace tomo::quantum
