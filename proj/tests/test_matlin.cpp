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
#include <limits>

#include "tomobench/estimators.hpp"
#include "tomobench/matlin.hpp"
#include "test_helpers.hpp"

using namespace tomo;
using matlin::ComplexMatrix;
using matlin::RealMatrix;
using test_helpers::random_matrix;

namespace {

// Direct evaluation of the four Penrose conditions.
void check_penrose(const RealMatrix& m, const RealMatrix& p, double tol) {
    const double scale = std::max(m.norm(), 1.0);
    CHECK((m * p * m - m).norm() <= tol * scale);
    CHECK((p * m * p - p).norm() <= tol * std::max(p.norm(), 1.0));
    CHECK(((m * p) - (m * p).transpose().eval()).norm() <= tol);
    CHECK(((p * m) - (p * m).transpose().eval()).norm() <= tol);
}

} // namespace

TEST_SUITE("matlin") {

TEST_CASE("pseudoinverse: identity and rank-deficient diagonal") {
    const RealMatrix eye = RealMatrix::Identity(3, 3);
    CHECK((matlin::pseudoinverse(eye, 1e-12) - eye).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));

    RealMatrix d(2, 2);
    d << 2, 0, 0, 0;
    RealMatrix expected(2, 2);
    expected << 0.5, 0, 0, 0;
    CHECK((matlin::pseudoinverse(d) - expected).norm() <= 1e-14);
}

TEST_CASE("pseudoinverse satisfies the four Penrose conditions") {
    RngStream rng(101);
    const RealMatrix m = random_matrix(5, 3, rng);
    check_penrose(m, matlin::pseudoinverse(m), 1e-9);

    for (int rep = 0; rep < 20; ++rep) {
        const int rows = 2 + static_cast<int>(rng.next_u64() % 6);
        const int cols = 2 + static_cast<int>(rng.next_u64() % 6);
        RealMatrix a = random_matrix(rows, cols, rng);
        if (rep % 4 == 0) {
            a.col(cols - 1) = a.col(0); // rank-deficient case
        }
        check_penrose(a, matlin::pseudoinverse(a), 1e-9);
    }
}

TEST_CASE("pseudoinverse involution and left inverse") {
    RngStream rng(102);
    for (int rep = 0; rep < 10; ++rep) {
        const RealMatrix m = random_matrix(4, 4, rng);
        const RealMatrix p = matlin::pseudoinverse(m);
        CHECK((matlin::pseudoinverse(p) - m).norm() <= 1e-8 * m.norm());
        CHECK((p * m - RealMatrix::Identity(4, 4)).norm() <= 1e-9);

        const RealMatrix tall = random_matrix(7, 3, rng);
        CHECK((matlin::pseudoinverse(tall) * tall -
               RealMatrix::Identity(3, 3))
                  .norm() <= 1e-9);
    }
}

TEST_CASE("complex pseudoinverse uses the conjugate transpose") {
    RngStream rng(103);
    const ComplexMatrix m = test_helpers::random_complex_matrix(5, 3, rng);
    const ComplexMatrix p = matlin::pseudoinverse(m);
    CHECK((m * p * m - m).norm() <= 1e-9 * m.norm());
    CHECK((p * m * p - p).norm() <= 1e-9 * p.norm());
    CHECK(((m * p) - (m * p).adjoint().eval()).norm() <= 1e-9);
    CHECK(((p * m) - (p * m).adjoint().eval()).norm() <= 1e-9);
}

TEST_CASE("pseudoinverse input validation") {
    CHECK_THROWS_AS(matlin::pseudoinverse(RealMatrix()), InvalidInput);
    RealMatrix bad(2, 2);
    bad << 1, 2, 3, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(matlin::pseudoinverse(bad), InvalidInput);
    RealMatrix ok = RealMatrix::Identity(2, 2);
    CHECK_THROWS_AS(matlin::pseudoinverse(ok, -1.0), InvalidInput);
}

TEST_CASE("condition number: basics") {
    CHECK(matlin::condition_number(RealMatrix::Identity(4, 4)) ==
          doctest::Approx(1.0));
    RealMatrix d(2, 2);
    d << 4, 0, 0, 2;
    CHECK(matlin::condition_number(d) == doctest::Approx(2.0));

    CHECK_THROWS_AS(matlin::condition_number(RealMatrix::Zero(3, 3)),
                    InvalidInput);

    RealMatrix deficient(3, 2);
    deficient << 1, 1, 2, 2, 3, 3;
    CHECK(std::isinf(matlin::condition_number(deficient)));
}

TEST_CASE("condition number is at least one") {
    RngStream rng(104);
    for (int rep = 0; rep < 25; ++rep) {
        const RealMatrix m = random_matrix(
            2 + static_cast<int>(rng.next_u64() % 5),
            2 + static_cast<int>(rng.next_u64() % 5), rng);
        CHECK(matlin::condition_number(m) >= 1.0);
    }
}

TEST_CASE("condition number agrees with the Gram-matrix spectrum") {
    // kappa(A) = sqrt(kappa(A^T A)) on a random square-root design matrix.
    RngStream rng(105);
    const auto basis = quantum::gell_mann_basis(6);
    const auto povm = test_helpers::random_sqrt_povm(6, 40, rng);
    const RealMatrix a =
        estimators::design_matrix(povm, basis).traceless().eval();
    const RealMatrix gram = a.transpose() * a;
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(gram,
                                                  Eigen::EigenvaluesOnly);
    const double oracle = std::sqrt(eig.eigenvalues().maxCoeff() /
                                    eig.eigenvalues().minCoeff());
    CHECK(matlin::condition_number(a) ==
          doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("inv_sqrt_psd: diagonal functional calculus") {
    const ComplexMatrix eye = ComplexMatrix::Identity(3, 3);
    CHECK((matlin::inv_sqrt_psd(eye) - eye).norm() <= 1e-12);

    ComplexMatrix d = ComplexMatrix::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 1.0;
    ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
    expected(0, 0) = 0.5;
    expected(1, 1) = 1.0;
    CHECK((matlin::inv_sqrt_psd(d) - expected).norm() <= 1e-12);
}

TEST_CASE("inv_sqrt_psd recovers the support projector of a Gram matrix") {
    RngStream rng(106);
    const auto kets = test_helpers::haar_kets(6, 40, rng);
    ComplexMatrix gram = ComplexMatrix::Zero(6, 6);
    for (const auto& k : kets) {
        gram += k.amplitudes() * k.amplitudes().adjoint();
    }
    const ComplexMatrix g_inv_sqrt = matlin::inv_sqrt_psd(gram);
    CHECK((g_inv_sqrt * gram * g_inv_sqrt - ComplexMatrix::Identity(6, 6))
              .norm() <= 1e-9);

    // Rank-deficient case: the product is the support projector.
    Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(2);
    e0(0) = 1.0;
    const ComplexMatrix low = 2.0 * e0 * e0.adjoint();
    const ComplexMatrix s = matlin::inv_sqrt_psd(low);
    CHECK((s * low * s - e0 * e0.adjoint()).norm() <= 1e-9);
}

TEST_CASE("inv_sqrt_psd input validation") {
    ComplexMatrix nonherm(2, 2);
    nonherm << 1.0, quantum::Complex(0.0, 1.0), quantum::Complex(0.0, 1.0),
        1.0;
    CHECK_THROWS_AS(matlin::inv_sqrt_psd(nonherm), InvalidInput);

    ComplexMatrix negative = ComplexMatrix::Identity(2, 2);
    negative(1, 1) = -0.5;
    CHECK_THROWS_AS(matlin::inv_sqrt_psd(negative), InvalidInput);
}

TEST_CASE("frobenius norm") {
    const RealMatrix zero = RealMatrix::Zero(3, 4);
    CHECK(matlin::frobenius_norm(zero) == 0.0);
    const RealMatrix eye5 = RealMatrix::Identity(5, 5);
    CHECK(matlin::frobenius_norm(eye5) == doctest::Approx(std::sqrt(5.0)));
    RealMatrix m(2, 2);
    m << 3, 4, 0, 0;
    CHECK(matlin::frobenius_norm(m) == doctest::Approx(5.0));
    const ComplexMatrix ceye = ComplexMatrix::Identity(4, 4);
    CHECK(matlin::frobenius_norm(ceye) == doctest::Approx(2.0));
}

TEST_CASE("trace norm is the sum of singular values") {
    RealMatrix m(2, 2);
    m << 3, 0, 0, -4;
    CHECK(matlin::trace_norm(m) == doctest::Approx(7.0));
    RngStream rng(107);
    const RealMatrix r = random_matrix(4, 6, rng);
    CHECK(matlin::trace_norm(r) >= matlin::frobenius_norm(r) - 1e-12);
}

} // TEST_SUITE
