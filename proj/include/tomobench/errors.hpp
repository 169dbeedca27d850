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

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tomo {

/// Base class for all errors thrown by this library.
class TomoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument: wrong shape, out-of-range parameter, NaN entries,
/// non-Hermitian input where a Hermitian one is required, and so on.
class InvalidInput : public TomoError {
  public:
    using TomoError::TomoError;
};

/// A dense decomposition (SVD, eigensolver, Cholesky) failed to converge.
class NumericalFailure : public TomoError {
  public:
    using TomoError::TomoError;
};

/// The ket family handed to the square-root construction has a rank-deficient
/// Gram matrix; the caller may redraw the kets.
class DegenerateMeasurement : public TomoError {
  public:
    using TomoError::TomoError;
};

/// An outcome probability is at (or below) the floor that keeps the 1/p
/// Fisher weights finite.
class SingularStatistics : public TomoError {
  public:
    using TomoError::TomoError;
};

/// The Fisher matrix is singular: the measurement does not determine the
/// state, so the error bound is undefined.
class InformationallyIncomplete : public TomoError {
  public:
    using TomoError::TomoError;
};

/// Every eigenvalue of the matrix handed to the physical projection is
/// non-positive, so no density matrix can be formed.
class DegenerateProjection : public TomoError {
  public:
    using TomoError::TomoError;
};

/// Rejection sampling ran out of attempts. Carries the attempt count and the
/// empirical range of inverse condition numbers seen while searching.
class SamplingExhausted : public TomoError {
  public:
    SamplingExhausted(const std::string& what, std::int64_t attempts,
                      double seen_min, double seen_max)
        : TomoError(what), attempts(attempts), seen_min(seen_min),
          seen_max(seen_max) {}

    std::int64_t attempts;
    double seen_min;
    double seen_max;
};

/// Too many Monte Carlo trials failed; the aggregate would be meaningless.
class SimulationAborted : public TomoError {
  public:
    using TomoError::TomoError;
};

} // namespace tomo
