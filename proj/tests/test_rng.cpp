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
#include <vector>

#include "tomobench/rng.hpp"

using tomo::RngStream;

TEST_SUITE("rng") {

TEST_CASE("streams are pure functions of (seed, index)") {
    RngStream a(12345, 7);
    RngStream b(12345, 7);
    for (int i = 0; i < 64; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }

    RngStream c(12345, 8);
    RngStream d(12346, 7);
    bool differs_c = false, differs_d = false;
    RngStream a2(12345, 7);
    for (int i = 0; i < 16; ++i) {
        const auto ref = a2.next_u64();
        differs_c |= (c.next_u64() != ref);
        differs_d |= (d.next_u64() != ref);
    }
    CHECK(differs_c);
    CHECK(differs_d);
}

TEST_CASE("derive leaves the parent untouched and is reproducible") {
    RngStream parent(99);
    RngStream child1 = parent.derive(3);
    RngStream child2 = parent.derive(3);
    CHECK(child1.next_u64() == child2.next_u64());

    RngStream fresh(99);
    CHECK(parent.next_u64() == fresh.next_u64());
}

TEST_CASE("uniform stays in [0,1) and uniform_pos in (0,1]") {
    RngStream rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.uniform_pos();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("gaussian moments") {
    RngStream rng(6);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson: degenerate and invalid means") {
    RngStream rng(7);
    for (int i = 0; i < 100; ++i) {
        CHECK(rng.poisson(0.0) == 0);
    }
    CHECK_THROWS_AS(rng.poisson(-1.0), tomo::InvalidInput);
    CHECK_THROWS_AS(rng.poisson(std::nan("")), tomo::InvalidInput);
}

TEST_CASE("poisson moments match for small and large means") {
    RngStream rng(8);
    for (const double mean : {0.7, 3.9, 47.0, 1234.5}) {
        const int n = 100000;
        double sum = 0.0, sum_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<double>(rng.poisson(mean));
            sum += k;
            sum_sq += k * k;
        }
        const double sample_mean = sum / n;
        const double sample_var = sum_sq / n - sample_mean * sample_mean;
        const double se_mean = std::sqrt(mean / n);
        // SE of the variance of a Poisson sample: sqrt((mu + 2 mu^2)/n).
        const double se_var = std::sqrt((mean + 2.0 * mean * mean) / n);
        CHECK(std::abs(sample_mean - mean) < 4.0 * se_mean);
        CHECK(std::abs(sample_var - mean) < 4.0 * se_var);
    }
}

TEST_CASE("poisson handles huge means without drift") {
    RngStream rng(9);
    const double mean = 1e9;
    for (int i = 0; i < 50; ++i) {
        const auto k = static_cast<double>(rng.poisson(mean));
        CHECK(std::abs(k - mean) < 7.0 * std::sqrt(mean));
    }
}

} // TEST_SUITE
