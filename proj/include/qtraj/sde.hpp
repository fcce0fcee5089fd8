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

// Euler integration of the stochastic propagator S_t driven by diffusive and
// counting observations. The true trajectory and the estimated filter are
// both read off the same propagator by normalized congruence, which keeps
// them exactly positive at every step.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

struct SimConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    std::uint64_t seed = 1;
    /// Upper bound on intensity * dt for any jump channel; at most 0.1.
    double max_jump_prob = 0.1;
    /// The propagator is rescaled to unit Frobenius norm every this many steps.
    int renorm_every = 1;

    void validate() const;
    std::int64_t num_steps() const;
    /// Step index of a sample time, snapped to the grid.
    std::int64_t step_index(double t) const;
};

/// Law the observation increments are drawn from.
enum class Measure {
    /// P^rho: innovations are Wiener, jumps have intensity tr(C rho_t C*).
    Physical,
    /// P: raw Wiener increments and unit-rate Poisson counts.
    Reference,
};

/// Rejects configurations whose step can push some jump probability above
/// max_jump_prob for any state.
void validate_for_model(const SimConfig& cfg, const ModelSpec& spec, Measure measure = Measure::Physical);

struct PairState {
    DensityMatrix rho;
    DensityMatrix rho_hat;
    /// S_t / ||S_t||_F (up to renorm cadence).
    ComplexMatrix propagator;
    /// S_t = exp(log_norm) * propagator.
    double log_norm = 0.0;
    std::vector<std::int64_t> jump_counts;
    double time = 0.0;
    std::int64_t steps = 0;
    /// Initial conditions the propagator acts on.
    DensityMatrix rho0;
    DensityMatrix rho_hat0;
};

/// Throws DegenerateStateError naming the offending eigenvector when
/// ker(rho_hat0) is not contained in ker(rho0).
void require_kernel_inclusion(const DensityMatrix& rho_hat0, const DensityMatrix& rho0);

PairState initial_pair_state(const ModelSpec& spec, const DensityMatrix& rho0, const DensityMatrix& rho_hat0);

/// Precomputed drift and channel operators for repeated stepping.
class Integrator {
public:
    Integrator(const ModelSpec& spec, const SimConfig& cfg);

    /// Advances the state by one step under P^rho, rho = state.rho. Returns the
    /// indices of jump channels that fired during the step.
    std::vector<std::size_t> advance(PairState& state, CounterRng& rng) const;

    /// One Euler step of the bare propagator under the reference measure.
    /// Returns false when the propagator has become exactly zero.
    bool advance_reference(ComplexMatrix& propagator, double& log_norm, std::int64_t step, CounterRng& rng) const;

    const ModelSpec& spec() const { return spec_; }
    const SimConfig& config() const { return cfg_; }

private:
    bool rescale(ComplexMatrix& propagator, double& log_norm, std::int64_t step) const;

    ModelSpec spec_;
    SimConfig cfg_;
    ComplexMatrix drift_step_;  // I + (K + (n-p)/2 I) dt
    std::vector<ComplexMatrix> diffusive_;
    std::vector<ComplexMatrix> jump_minus_id_;
    std::vector<ComplexMatrix> jump_dag_jump_;
    double sqrt_dt_ = 0.0;
};

/// Pure single-step form of Integrator::advance.
PairState step(const ModelSpec& spec, const PairState& state, const SimConfig& cfg, CounterRng& rng);

/// M_t = S*S / tr(S*S).
HermitianMatrix derive_M(const PairState& state);

/// Fidelity of the two compressed initial states sqrt(M) rho sqrt(M) / tr(M rho).
double fidelity_via_M(const PairState& state, const DensityMatrix& rho0, const DensityMatrix& rho_hat0);

/// Z_t^rho = tr(S_t* S_t rho).
double likelihood(const PairState& state, const DensityMatrix& rho);

/// Q_i = tr(M_i x) for each dual projector.
std::vector<double> q_vector(std::span<const HermitianMatrix> dualprojs, const ComplexMatrix& x);

struct PathSample {
    double time = 0.0;
    double fidelity = 1.0;
    double fidelity_via_M = 1.0;
    std::vector<double> q_rho;
    std::vector<double> q_rho_hat;
    ComplexMatrix rho;
    ComplexMatrix rho_hat;
    /// (1/t) int_0^t rho_s ds, trapezoidal at the step size; rho_0 at t = 0.
    ComplexMatrix cesaro_rho;
    ComplexMatrix cesaro_rho_hat;
    std::vector<std::int64_t> jump_counts;
};

struct PathRecord {
    std::vector<PathSample> samples;
    std::vector<std::vector<double>> jump_times; // per jump channel
    PairState final_state;
};

/// Integrates one trajectory and its estimated filter on a shared record.
/// Requires ker(rho_hat0) in ker(rho0). Errors carry the failure time.
PathRecord simulate_pair(const ModelSpec& spec,
                         const DensityMatrix& rho0,
                         const DensityMatrix& rho_hat0,
                         std::span<const HermitianMatrix> dualprojs,
                         const SimConfig& cfg,
                         std::span<const double> sample_times,
                         CounterRng rng);

struct ReferenceRecord {
    std::vector<double> times;
    /// z[s][t]: likelihood of states[s] at times[t].
    std::vector<std::vector<double>> z;
};

ReferenceRecord simulate_reference(const ModelSpec& spec,
                                   std::span<const DensityMatrix> states,
                                   const SimConfig& cfg,
                                   std::span<const double> sample_times,
                                   CounterRng rng);

} // namespace qtraj
