// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qtraj {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An eigen-solver, exponential or similar kernel did not produce a finite result.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class NotPsdError : public Error {
public:
    using Error::Error;
};

/// A matrix that should have been normalizable had (numerically) zero trace.
class DegenerateStateError : public Error {
public:
    using Error::Error;
};

/// Construction-time validation of a matrix, model or configuration value.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The simulated unnormalized state lost all of its weight.
class TrajectoryDeath : public Error {
public:
    using Error::Error;
};

/// A jump intensity times the step exceeded the configured probability cap.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// The model lies outside the class the structure analysis supports
/// (nonzero decaying subspace).
class UnsupportedModel : public Error {
public:
    using Error::Error;
};

/// The invariant-state decomposition could not be carried out.
class DecompositionError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo experiment lost too many trajectories to be trusted.
class ExperimentAborted : public Error {
public:
    using Error::Error;
};

} // namespace qtraj
