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
 * @file rng.hpp
 * Counter-based splittable random streams. A stream is a pure function of
 * (master_seed, stream_index): derived child streams fold a tag into the
 * index, so trial-level parallelism never changes the numbers drawn.
 *
 * The generator is the SplittableRandom design: a 64-bit counter advanced by
 * a per-stream odd gamma, finalized with a strong avalanche mix. Poisson
 * variates use Knuth's product method below mean 10 and Hormann's transformed
 * rejection (PTRD) above it.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "tomobench/errors.hpp"

namespace tomo {

namespace detail {

/// Stafford variant 13 of the splitmix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Variant 12, used for gamma derivation so state and gamma decorrelate.
inline constexpr std::uint64_t mix64_alt(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDULL;
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ULL;
    return z ^ (z >> 33);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// ln(k!) with a cached table for small k and a Stirling series beyond it.
inline double log_factorial(std::int64_t k) {
    static const std::vector<double> table = [] {
        std::vector<double> t(1024);
        t[0] = 0.0;
        for (std::size_t i = 1; i < t.size(); ++i) {
            t[i] = t[i - 1] + std::log(static_cast<double>(i));
        }
        return t;
    }();
    if (k < static_cast<std::int64_t>(table.size())) {
        return table[static_cast<std::size_t>(k)];
    }
    const double x = static_cast<double>(k);
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Stirling series; error < 1e-21 for k >= 1024.
    return 0.9189385332046727 + (x + 0.5) * std::log(x) - x +
           inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

} // namespace detail

/**
 * A deterministic random stream identified by (master_seed, stream_index).
 * Each stream owns its state; derive() creates statistically independent
 * children without touching the parent.
 */
class RngStream {
  public:
    explicit RngStream(std::uint64_t master_seed,
                       std::uint64_t stream_index = 0)
        : seed_(master_seed), stream_(stream_index) {
        state_ = detail::mix64(detail::mix64(master_seed ^ 0xA3EC4E93C0A1B2C5ULL) +
                               detail::kGolden * stream_index);
        gamma_ = detail::mix64_alt(state_ ^ detail::kGolden) | 1ULL;
        // Avoid gammas with too-regular bit structure (SplittableRandom fix).
        if (__builtin_popcountll(gamma_ ^ (gamma_ >> 1)) < 24) {
            gamma_ ^= 0xAAAAAAAAAAAAAAAAULL;
        }
    }

    std::uint64_t master_seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_; }

    /// Independent child stream; the parent is left untouched.
    RngStream derive(std::uint64_t tag) const {
        return RngStream(seed_,
                         detail::mix64(stream_ * 0xD1B54A32D192ED03ULL +
                                       detail::kGolden + tag));
    }

    RngStream derive(std::uint64_t tag_a, std::uint64_t tag_b) const {
        return derive(tag_a).derive(tag_b);
    }

    std::uint64_t next_u64() {
        state_ += gamma_;
        return detail::mix64(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double t = 6.283185307179586476925286766559 * uniform();
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

    /// Complex number with independent standard normal parts.
    std::complex<double> complex_gaussian() {
        const double re = gaussian();
        const double im = gaussian();
        return {re, im};
    }

    /// Poisson variate with the given mean.
    std::int64_t poisson(double mean) {
        if (!(mean >= 0.0) || !std::isfinite(mean)) {
            throw InvalidInput("poisson: mean must be finite and >= 0");
        }
        if (mean == 0.0) {
            return 0;
        }
        if (mean < 10.0) {
            return poisson_small(mean);
        }
        return poisson_ptrd(mean);
    }

  private:
    // Knuth product method; exact and fast for small means.
    std::int64_t poisson_small(double mean) {
        const double threshold = std::exp(-mean);
        std::int64_t k = 0;
        double prod = uniform_pos();
        while (prod > threshold) {
            ++k;
            prod *= uniform_pos();
        }
        return k;
    }

    // Hormann's transformed rejection with squeeze (PTRD).
    std::int64_t poisson_ptrd(double mean) {
        const double smu = std::sqrt(mean);
        const double log_mean = std::log(mean);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        for (;;) {
            const double u = uniform() - 0.5;
            const double v = uniform_pos();
            const double us = 0.5 - std::abs(u);
            const auto k = static_cast<std::int64_t>(
                std::floor((2.0 * a / us + b) * u + mean + 0.43));
            if (us >= 0.07 && v <= v_r) {
                return k;
            }
            if (k < 0 || (us < 0.013 && v > us)) {
                continue;
            }
            if (std::log(v) + std::log(inv_alpha) -
                    std::log(a / (us * us) + b) <=
                -mean + static_cast<double>(k) * log_mean -
                    detail::log_factorial(k)) {
                return k;
            }
        }
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t state_;
    std::uint64_t gamma_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace tomo
