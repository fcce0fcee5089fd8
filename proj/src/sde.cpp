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

#include "qtraj/sde.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "qtraj/errors.hpp"

namespace qtraj {

namespace {

constexpr double kDeathThreshold = 1e-300;

std::string at_time(double t)
{
    std::ostringstream os;
    os.precision(10);
    os << " at t=" << t;
    return os.str();
}

double max_eigenvalue(const ComplexMatrix& a)
{
    return eig_hermitian(HermitianMatrix(a)).values.maxCoeff();
}

// Normalized congruence S x S* / tr(S x S*). Returns false on underflow.
bool congruence(const ComplexMatrix& s, const ComplexMatrix& x, ComplexMatrix& out)
{
    out.noalias() = s * x * s.adjoint();
    const double tr = trace(out).real();
    if (!(tr > kDeathThreshold) || !std::isfinite(tr))
        return false;
    out /= tr;
    return true;
}

} // namespace

void SimConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidArgument("simulation.dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw InvalidArgument("simulation.horizon must be positive");
    if (dt > horizon)
        throw InvalidArgument("simulation.dt must not exceed simulation.horizon");
    if (!(max_jump_prob > 0.0) || max_jump_prob > 0.1)
        throw InvalidArgument("simulation.max_jump_prob must lie in (0, 0.1]");
    if (renorm_every < 1)
        throw InvalidArgument("simulation.renorm_every must be at least 1");
}

std::int64_t SimConfig::num_steps() const
{
    return static_cast<std::int64_t>(std::ceil(horizon / dt - 1e-9));
}

std::int64_t SimConfig::step_index(double t) const
{
    if (t < 0.0 || !std::isfinite(t))
        throw InvalidArgument("sample time must be finite and non-negative");
    const auto idx = static_cast<std::int64_t>(std::llround(t / dt));
    if (idx > num_steps())
        throw InvalidArgument("sample time " + std::to_string(t) + " exceeds the horizon");
    return idx;
}

void validate_for_model(const SimConfig& cfg, const ModelSpec& spec, Measure measure)
{
    cfg.validate();
    for (std::size_t j = 0; j < spec.num_jump(); ++j) {
        const ComplexMatrix& c = spec.jump_ops()[j];
        const double rate = measure == Measure::Reference ? 1.0 : max_eigenvalue(c.adjoint() * c);
        if (rate * cfg.dt > cfg.max_jump_prob) {
            std::ostringstream os;
            os << "jump[" << j << "]: intensity bound " << rate << " times dt " << cfg.dt
               << " exceeds max_jump_prob " << cfg.max_jump_prob;
            throw StepSizeError(os.str());
        }
    }
}

void require_kernel_inclusion(const DensityMatrix& rho_hat0, const DensityMatrix& rho0)
{
    const KernelInclusion inc = kernel_inclusion(rho_hat0, rho0, kEigenTolerance);
    if (inc.holds)
        return;
    std::ostringstream os;
    os.precision(17);
    os << "kernel of the estimate is not contained in the kernel of the true state; offending eigenvector [";
    if (inc.witness) {
        for (Eigen::Index i = 0; i < inc.witness->size(); ++i) {
            const Complex z = (*inc.witness)(i);
            os << (i ? ", " : "") << "[" << z.real() << ", " << z.imag() << "]";
        }
    }
    os << "]";
    throw DegenerateStateError(os.str());
}

PairState initial_pair_state(const ModelSpec& spec, const DensityMatrix& rho0, const DensityMatrix& rho_hat0)
{
    const Eigen::Index k = spec.dim();
    if (rho0.dim() != k || rho_hat0.dim() != k)
        throw InvalidArgument("initial states must match the model dimension");
    return PairState{
        .rho = rho0,
        .rho_hat = rho_hat0,
        .propagator = ComplexMatrix::Identity(k, k) / std::sqrt(static_cast<double>(k)),
        .log_norm = 0.5 * std::log(static_cast<double>(k)),
        .jump_counts = std::vector<std::int64_t>(spec.num_jump(), 0),
        .time = 0.0,
        .steps = 0,
        .rho0 = rho0,
        .rho_hat0 = rho_hat0,
    };
}

Integrator::Integrator(const ModelSpec& spec, const SimConfig& cfg) : spec_(spec), cfg_(cfg)
{
    cfg_.validate();
    const Eigen::Index k = spec.dim();
    const ComplexMatrix id = ComplexMatrix::Identity(k, k);
    const double m = static_cast<double>(spec.num_jump());
    drift_step_ = id + (drift_K(spec) + 0.5 * m * id) * cfg.dt;
    diffusive_ = spec.diffusive_ops();
    for (const auto& c : spec.jump_ops()) {
        jump_minus_id_.push_back(c - id);
        jump_dag_jump_.push_back(c.adjoint() * c);
    }
    sqrt_dt_ = std::sqrt(cfg.dt);
}

bool Integrator::rescale(ComplexMatrix& propagator, double& log_norm, std::int64_t step) const
{
    if (step % cfg_.renorm_every != 0)
        return true;
    const double n = propagator.norm();
    if (!(n > 0.0))
        return false;
    if (!std::isfinite(n))
        throw NumericalFailure("propagator overflowed");
    propagator /= n;
    log_norm += std::log(n);
    return true;
}

std::vector<std::size_t> Integrator::advance(PairState& state, CounterRng& rng) const
{
    const double dt = cfg_.dt;
    const ComplexMatrix& rho = state.rho.matrix();

    ComplexMatrix g = drift_step_;
    for (const auto& l : diffusive_) {
        const double innovation = sqrt_dt_ * rng.normal();
        const double drift = 2.0 * (l * rho).trace().real();
        g += l * (innovation + drift * dt);
    }
    std::vector<std::size_t> fired;
    for (std::size_t j = 0; j < jump_dag_jump_.size(); ++j) {
        const double rate = std::max(0.0, (jump_dag_jump_[j] * rho).trace().real());
        if (rate * dt > cfg_.max_jump_prob)
            throw StepSizeError("jump[" + std::to_string(j) + "]: intensity * dt exceeds max_jump_prob" +
                                at_time(state.time));
        const double p = -std::expm1(-rate * dt);
        if (rng.uniform() < p) {
            g += jump_minus_id_[j];
            fired.push_back(j);
        }
    }

    ComplexMatrix next = g * state.propagator;
    const std::int64_t steps = state.steps + 1;
    if (!rescale(next, state.log_norm, steps))
        throw TrajectoryDeath("propagator vanished" + at_time(steps * dt));

    ComplexMatrix r, rh;
    if (!congruence(next, state.rho0.matrix(), r))
        throw TrajectoryDeath("tr(S rho S*) underflowed" + at_time(steps * dt));
    if (!congruence(next, state.rho_hat0.matrix(), rh))
        throw TrajectoryDeath("tr(S rho_hat S*) underflowed" + at_time(steps * dt));

    state.propagator = std::move(next);
    state.rho = DensityMatrix::assume_valid(std::move(r));
    state.rho_hat = DensityMatrix::assume_valid(std::move(rh));
    for (std::size_t j : fired)
        ++state.jump_counts[j];
    state.steps = steps;
    state.time = static_cast<double>(steps) * dt;
    return fired;
}

bool Integrator::advance_reference(ComplexMatrix& propagator, double& log_norm, std::int64_t step,
                                   CounterRng& rng) const
{
    ComplexMatrix g = drift_step_;
    for (const auto& l : diffusive_)
        g += l * (sqrt_dt_ * rng.normal());
    const double p = -std::expm1(-cfg_.dt);
    for (const auto& c : jump_minus_id_) {
        if (rng.uniform() < p)
            g += c;
    }
    propagator = g * propagator;
    return rescale(propagator, log_norm, step);
}

PairState step(const ModelSpec& spec, const PairState& state, const SimConfig& cfg, CounterRng& rng)
{
    Integrator integrator(spec, cfg);
    PairState next = state;
    integrator.advance(next, rng);
    return next;
}

HermitianMatrix derive_M(const PairState& state)
{
    const ComplexMatrix m = state.propagator.adjoint() * state.propagator;
    return HermitianMatrix(m / trace(m).real());
}

double fidelity_via_M(const PairState& state, const DensityMatrix& rho0, const DensityMatrix& rho_hat0)
{
    const HermitianMatrix m = derive_M(state);
    const double w_hat = (m.matrix() * rho_hat0.matrix()).trace().real();
    if (!(w_hat > 1e-14))
        throw DegenerateStateError("tr(M rho_hat) vanished; kernel inclusion violated");
    const double w = (m.matrix() * rho0.matrix()).trace().real();
    if (!(w > 0.0))
        throw DegenerateStateError("tr(M rho) vanished");
    const ComplexMatrix root = herm_sqrt(m).matrix();
    const ComplexMatrix a = root * rho0.matrix() * root / w;
    const ComplexMatrix b = root * rho_hat0.matrix() * root / w_hat;
    return fidelity(DensityMatrix::assume_valid(a), DensityMatrix::assume_valid(b));
}

double likelihood(const PairState& state, const DensityMatrix& rho)
{
    const ComplexMatrix& p = state.propagator;
    const double z = (p * rho.matrix() * p.adjoint()).trace().real();
    return std::exp(2.0 * state.log_norm) * std::max(0.0, z);
}

std::vector<double> q_vector(std::span<const HermitianMatrix> dualprojs, const ComplexMatrix& x)
{
    std::vector<double> q;
    q.reserve(dualprojs.size());
    for (const auto& m : dualprojs)
        q.push_back((m.matrix() * x).trace().real());
    return q;
}

namespace {

std::vector<std::int64_t> sample_indices(const SimConfig& cfg, std::span<const double> sample_times)
{
    std::vector<std::int64_t> idx;
    idx.reserve(sample_times.size());
    for (double t : sample_times) {
        const std::int64_t i = cfg.step_index(t);
        if (!idx.empty() && i < idx.back())
            throw InvalidArgument("sample times must be non-decreasing");
        idx.push_back(i);
    }
    return idx;
}

} // namespace

PathRecord simulate_pair(const ModelSpec& spec,
                         const DensityMatrix& rho0,
                         const DensityMatrix& rho_hat0,
                         std::span<const HermitianMatrix> dualprojs,
                         const SimConfig& cfg,
                         std::span<const double> sample_times,
                         CounterRng rng)
{
    validate_for_model(cfg, spec);
    require_kernel_inclusion(rho_hat0, rho0);

    const std::vector<std::int64_t> idx = sample_indices(cfg, sample_times);
    const std::int64_t last = idx.empty() ? cfg.num_steps() : std::max(idx.back(), cfg.num_steps());

    Integrator integrator(spec, cfg);
    PairState state = initial_pair_state(spec, rho0, rho_hat0);

    std::vector<PathSample> samples;
    samples.reserve(idx.size());
    std::vector<std::vector<double>> jump_times(spec.num_jump());

    ComplexMatrix integral = ComplexMatrix::Zero(spec.dim(), spec.dim());
    ComplexMatrix integral_hat = integral;

    auto emit = [&](std::int64_t step) {
        PathSample s;
        s.time = static_cast<double>(step) * cfg.dt;
        s.rho = state.rho.matrix();
        s.rho_hat = state.rho_hat.matrix();
        s.fidelity = fidelity(state.rho, state.rho_hat);
        s.fidelity_via_M = fidelity_via_M(state, rho0, rho_hat0);
        s.q_rho = q_vector(dualprojs, s.rho);
        s.q_rho_hat = q_vector(dualprojs, s.rho_hat);
        if (step == 0) {
            s.cesaro_rho = rho0.matrix();
            s.cesaro_rho_hat = rho_hat0.matrix();
        } else {
            s.cesaro_rho = hermitian_part(integral / s.time);
            s.cesaro_rho_hat = hermitian_part(integral_hat / s.time);
        }
        s.jump_counts = state.jump_counts;
        samples.push_back(std::move(s));
    };

    std::size_t next_sample = 0;
    auto flush = [&](std::int64_t step) {
        while (next_sample < idx.size() && idx[next_sample] == step) {
            emit(step);
            ++next_sample;
        }
    };

    flush(0);
    const double half_dt = 0.5 * cfg.dt;
    for (std::int64_t n = 1; n <= last; ++n) {
        integral += half_dt * state.rho.matrix();
        integral_hat += half_dt * state.rho_hat.matrix();
        const std::vector<std::size_t> fired = integrator.advance(state, rng);
        integral += half_dt * state.rho.matrix();
        integral_hat += half_dt * state.rho_hat.matrix();
        for (std::size_t j : fired)
            jump_times[j].push_back(state.time);
        try {
            flush(n);
        } catch (const DegenerateStateError& e) {
            throw DegenerateStateError(std::string(e.what()) + at_time(state.time));
        }
    }
    return PathRecord{std::move(samples), std::move(jump_times), std::move(state)};
}

ReferenceRecord simulate_reference(const ModelSpec& spec,
                                   std::span<const DensityMatrix> states,
                                   const SimConfig& cfg,
                                   std::span<const double> sample_times,
                                   CounterRng rng)
{
    validate_for_model(cfg, spec, Measure::Reference);
    const Eigen::Index k = spec.dim();
    for (const auto& s : states) {
        if (s.dim() != k)
            throw InvalidArgument("reference states must match the model dimension");
    }
    const std::vector<std::int64_t> idx = sample_indices(cfg, sample_times);
    const std::int64_t last = idx.empty() ? 0 : idx.back();

    Integrator integrator(spec, cfg);
    ComplexMatrix propagator = ComplexMatrix::Identity(k, k) / std::sqrt(static_cast<double>(k));
    double log_norm = 0.5 * std::log(static_cast<double>(k));
    bool alive = true;

    ReferenceRecord record;
    record.z.assign(states.size(), {});
    std::size_t next_sample = 0;
    auto flush = [&](std::int64_t step) {
        while (next_sample < idx.size() && idx[next_sample] == step) {
            record.times.push_back(static_cast<double>(step) * cfg.dt);
            const double scale = std::exp(2.0 * log_norm);
            for (std::size_t s = 0; s < states.size(); ++s) {
                double z = 0.0;
                if (alive) {
                    z = (propagator * states[s].matrix() * propagator.adjoint()).trace().real();
                    z = std::max(0.0, z) * scale;
                }
                record.z[s].push_back(z);
            }
            ++next_sample;
        }
    };

    flush(0);
    for (std::int64_t n = 1; n <= last; ++n) {
        if (alive)
            alive = integrator.advance_reference(propagator, log_norm, n, rng);
        flush(n);
    }
    return record;
}

} // namespace qtraj
