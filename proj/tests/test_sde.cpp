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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qtraj/errors.hpp"
#include "qtraj/sde.hpp"
#include "test_util.hpp"

namespace qtraj {
namespace {

SimConfig make_config(double dt, double horizon, std::uint64_t seed = 1)
{
    SimConfig cfg;
    cfg.dt = dt;
    cfg.horizon = horizon;
    cfg.seed = seed;
    return cfg;
}

std::vector<double> grid(double step, double horizon)
{
    std::vector<double> t;
    for (int i = 0; i * step <= horizon + 1e-12; ++i)
        t.push_back(i * step);
    return t;
}

double min_eigenvalue(const ComplexMatrix& a)
{
    return eig_hermitian(HermitianMatrix(a)).values(0);
}

TEST(SimConfigTest, ValidationAndGrid)
{
    SimConfig cfg = make_config(0.1, 1.0);
    EXPECT_EQ(cfg.num_steps(), 10);
    EXPECT_EQ(cfg.step_index(0.3), 3);
    EXPECT_THROW(cfg.step_index(1.5), InvalidArgument);
    EXPECT_THROW(cfg.step_index(-0.1), InvalidArgument);
    cfg.dt = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = make_config(0.1, 1.0);
    cfg.max_jump_prob = 0.2;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = make_config(2.0, 1.0);
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(SimConfigTest, StepSizeBoundedByJumpIntensity)
{
    const ModelSpec spec(ComplexMatrix::Zero(2, 2), {}, {2.0 * pauli::lowering()});
    // Intensity bound is lambda_max(C*C) = 4.
    EXPECT_THROW(validate_for_model(make_config(0.03, 1.0), spec), StepSizeError);
    EXPECT_NO_THROW(validate_for_model(make_config(0.02, 1.0), spec));
    EXPECT_THROW(validate_for_model(make_config(0.2, 1.0), testing::amplitude_damping(), Measure::Reference),
                 StepSizeError);
}

TEST(KernelInclusionErrorTest, MessageNamesEigenvector)
{
    try {
        require_kernel_inclusion(testing::basis_state(2, 0), testing::plus_state());
        FAIL() << "expected DegenerateStateError";
    } catch (const DegenerateStateError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("offending eigenvector"), std::string::npos) << msg;
    }
    EXPECT_THROW(simulate_pair(testing::qnd_qubit(), testing::plus_state(), testing::basis_state(2, 0), {},
                               make_config(0.01, 0.1), std::vector<double>{0.0}, CounterRng(1, 0)),
                 DegenerateStateError);
}

TEST(PairStateTest, InitialPropagatorGivesUniformM)
{
    const PairState s = initial_pair_state(testing::qnd_qubit(), testing::plus_state(),
                                           DensityMatrix::maximally_mixed(2));
    EXPECT_LT((derive_M(s).matrix() - 0.5 * pauli::identity()).norm(), 1e-15);
    EXPECT_NEAR(likelihood(s, testing::plus_state()), 1.0, 1e-14);
    EXPECT_NEAR(fidelity_via_M(s, s.rho0, s.rho_hat0), fidelity(s.rho0, s.rho_hat0), 1e-14);
}

TEST(StepTest, PureFunctionLeavesInputUntouched)
{
    const ModelSpec spec = testing::qnd_qubit();
    const SimConfig cfg = make_config(1e-3, 1.0);
    const PairState s0 = initial_pair_state(spec, testing::plus_state(), DensityMatrix::maximally_mixed(2));
    CounterRng a(3, 0), b(3, 0);
    const PairState s1 = step(spec, s0, cfg, a);
    const PairState s2 = step(spec, s0, cfg, b);
    EXPECT_EQ(s0.steps, 0);
    EXPECT_EQ(s1.steps, 1);
    EXPECT_EQ(s1.propagator, s2.propagator);
    EXPECT_DOUBLE_EQ(s1.time, 1e-3);
}

TEST(SimulatePairTest, IdentityJumpLeavesStatesFixed)
{
    // C = I: jumps carry no information and the compensated drift vanishes.
    const ModelSpec spec(ComplexMatrix::Zero(2, 2), {}, {pauli::identity()});
    const DensityMatrix rho0 = testing::plus_state();
    const DensityMatrix rho_hat0(testing::diag2(0.3, 0.7));
    const PathRecord rec = simulate_pair(spec, rho0, rho_hat0, {}, make_config(0.01, 20.0, 4),
                                         grid(1.0, 20.0), CounterRng(4, 0));
    for (const auto& s : rec.samples) {
        EXPECT_LT((s.rho - rho0.matrix()).norm(), 1e-12);
        EXPECT_LT((s.rho_hat - rho_hat0.matrix()).norm(), 1e-12);
    }
    // Roughly 20 unit-rate jumps should have been recorded.
    EXPECT_GT(rec.jump_times[0].size(), 3u);
}

TEST(SimulatePairTest, EigenstateOfQndObservableIsFixed)
{
    const DensityMatrix e0 = testing::basis_state(2, 0);
    const PathRecord rec = simulate_pair(testing::qnd_qubit(), e0, DensityMatrix::maximally_mixed(2), {},
                                         make_config(1e-3, 2.0), grid(0.5, 2.0), CounterRng(9, 3));
    for (const auto& s : rec.samples)
        EXPECT_LT((s.rho - e0.matrix()).norm(), 1e-12);
}

TEST(SimulatePairTest, MatchedEstimateHasUnitFidelity)
{
    std::mt19937_64 gen(12);
    const DensityMatrix rho0 = testing::random_density(2, 2, gen);
    const ModelSpec spec(pauli::x(), {0.7 * pauli::z()}, {0.8 * pauli::lowering()});
    const PathRecord rec =
        simulate_pair(spec, rho0, rho0, {}, make_config(1e-3, 3.0), grid(0.25, 3.0), CounterRng(5, 1));
    for (const auto& s : rec.samples) {
        EXPECT_NEAR(s.fidelity, 1.0, 1e-10);
        EXPECT_LT((s.rho - s.rho_hat).norm(), 1e-12);
    }
}

TEST(SimulatePairTest, FidelityAgreesWithCompressedInitialStates)
{
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 6; ++trial) {
        const Eigen::Index k = 2 + trial % 3;
        const ComplexMatrix g = testing::ginibre(k, k, gen);
        const ModelSpec spec(0.25 * (g + g.adjoint()), {0.5 * testing::ginibre(k, k, gen)},
                             {0.3 * testing::ginibre(k, k, gen)});
        const DensityMatrix rho0 = testing::random_density(k, 1 + trial % k, gen);
        const DensityMatrix rho_hat0 = testing::random_density(k, k, gen);
        SimConfig cfg = make_config(1e-3, 4.0, 100 + trial);
        const PathRecord rec = simulate_pair(spec, rho0, rho_hat0, {}, cfg, grid(0.5, 4.0), CounterRng(cfg.seed, 0));
        for (const auto& s : rec.samples)
            EXPECT_NEAR(s.fidelity, s.fidelity_via_M, 1e-8) << "k=" << k << " t=" << s.time;
    }
}

TEST(SimulatePairTest, StatesRemainDensityMatrices)
{
    std::mt19937_64 gen(14);
    const Eigen::Index k = 3;
    const ModelSpec spec(ComplexMatrix::Zero(k, k), {testing::ginibre(k, k, gen)}, {0.5 * testing::ginibre(k, k, gen)});
    const DensityMatrix rho0 = testing::random_density(k, 1, gen);
    SimConfig cfg = make_config(1e-3, 5.0);
    const PathRecord rec = simulate_pair(spec, rho0, DensityMatrix::maximally_mixed(k), {}, cfg, grid(0.01, 5.0),
                                         CounterRng(6, 0));
    for (const auto& s : rec.samples) {
        for (const ComplexMatrix* m : {&s.rho, &s.rho_hat, &s.cesaro_rho, &s.cesaro_rho_hat}) {
            EXPECT_NEAR(m->trace().real(), 1.0, 1e-12);
            EXPECT_GE(min_eigenvalue(*m), -1e-12);
        }
        EXPECT_GE(s.fidelity, 0.0);
        EXPECT_LE(s.fidelity, 1.0);
    }
}

TEST(SimulatePairTest, DeterministicForFixedKey)
{
    const ModelSpec spec(0.5 * pauli::x(), {0.5 * pauli::z()}, {pauli::lowering()});
    const SimConfig cfg = make_config(2e-3, 2.0);
    auto run = [&](std::uint64_t stream) {
        return simulate_pair(spec, testing::plus_state(), DensityMatrix::maximally_mixed(2), {}, cfg,
                             grid(0.5, 2.0), CounterRng(77, stream));
    };
    const PathRecord a = run(3), b = run(3), c = run(4);
    ASSERT_EQ(a.samples.size(), b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        EXPECT_EQ(a.samples[i].rho, b.samples[i].rho);
        EXPECT_EQ(a.samples[i].fidelity, b.samples[i].fidelity);
    }
    EXPECT_EQ(a.jump_times, b.jump_times);
    EXPECT_NE(a.samples.back().rho, c.samples.back().rho);
}

TEST(SimulatePairTest, SamplesSnapToGridAndCesaroStartsAtInitialState)
{
    const PathRecord rec = simulate_pair(testing::qnd_qubit(), testing::plus_state(),
                                         DensityMatrix::maximally_mixed(2), {}, make_config(0.1, 1.0),
                                         std::vector<double>{0.0, 0.31, 1.0}, CounterRng(1, 1));
    ASSERT_EQ(rec.samples.size(), 3u);
    EXPECT_DOUBLE_EQ(rec.samples[1].time, 0.30000000000000004);
    EXPECT_EQ(rec.samples[0].cesaro_rho, testing::plus_state().matrix());
    EXPECT_EQ(rec.final_state.steps, 10);
}

TEST(SimulatePairTest, DualProjectorComponentsOfQndModel)
{
    const std::vector<HermitianMatrix> duals = {HermitianMatrix(testing::diag2(1.0, 0.0)),
                                                HermitianMatrix(testing::diag2(0.0, 1.0))};
    const DensityMatrix rho0(testing::diag2(0.3, 0.7));
    const PathRecord rec = simulate_pair(testing::qnd_qubit(), rho0, DensityMatrix::maximally_mixed(2), duals,
                                         make_config(1e-3, 1.0), grid(0.5, 1.0), CounterRng(2, 2));
    for (const auto& s : rec.samples) {
        ASSERT_EQ(s.q_rho.size(), 2u);
        EXPECT_NEAR(s.q_rho[0] + s.q_rho[1], 1.0, 1e-12);
    }
    EXPECT_NEAR(rec.samples[0].q_rho[0], 0.3, 1e-15);
}

TEST(SimulatePairTest, AmplitudeDampingJumpsOnce)
{
    // From the excited state the record is a single jump to the ground state.
    const SimConfig cfg = make_config(1e-3, 20.0);
    int jumped = 0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const PathRecord rec = simulate_pair(testing::amplitude_damping(), testing::basis_state(2, 1),
                                             DensityMatrix::maximally_mixed(2), {}, cfg, grid(5.0, 20.0),
                                             CounterRng(8, i));
        ASSERT_LE(rec.jump_times[0].size(), 1u);
        jumped += static_cast<int>(rec.jump_times[0].size());
        if (!rec.jump_times[0].empty())
            EXPECT_NEAR(rec.samples.back().rho(0, 0).real(), 1.0, 1e-12);
    }
    // P(no jump by t = 20) = e^{-20}.
    EXPECT_EQ(jumped, 20);
}

// Euler scheme applied directly to the nonlinear filter, fed with the same
// innovations as the propagator scheme. The two discretizations agree to
// strong order one half.
ComplexMatrix direct_filter_step(const ModelSpec& spec, const ComplexMatrix& rho, double dt, CounterRng& rng)
{
    ComplexMatrix next = rho + apply_lindbladian(spec, rho) * dt;
    for (const auto& l : spec.diffusive_ops()) {
        const double dw = std::sqrt(dt) * rng.normal();
        const double mean = 2.0 * (l * rho).trace().real();
        next += (l * rho + rho * l.adjoint() - mean * rho) * dw;
    }
    next = 0.5 * (next + next.adjoint());
    return next / next.trace().real();
}

TEST(SimulatePairTest, AgreesWithDirectFilterDiscretization)
{
    const ModelSpec spec(0.5 * pauli::x(), {0.8 * pauli::z(), 0.4 * pauli::lowering()}, {});
    const double dt = 1e-4, horizon = 1.0;
    const DensityMatrix rho0 = testing::plus_state();
    double total = 0.0;
    const int paths = 20;
    for (int p = 0; p < paths; ++p) {
        const PathRecord rec = simulate_pair(spec, rho0, rho0, {}, make_config(dt, horizon),
                                             std::vector<double>{horizon}, CounterRng(31, p));
        CounterRng replay(31, p);
        ComplexMatrix rho = rho0.matrix();
        for (std::int64_t n = 0; n < make_config(dt, horizon).num_steps(); ++n)
            rho = direct_filter_step(spec, rho, dt, replay);
        total += trace_distance(rho, rec.samples.back().rho);
    }
    // Strong order one half: the mean gap scales as sqrt(T dt) = 0.01.
    EXPECT_LT(total / paths, 0.03);
}

TEST(SimulateReferenceTest, IdentityJumpGivesUnitLikelihood)
{
    const ModelSpec spec(ComplexMatrix::Zero(2, 2), {}, {pauli::identity()});
    const std::vector<DensityMatrix> states = {testing::plus_state(), DensityMatrix::maximally_mixed(2)};
    const ReferenceRecord rec =
        simulate_reference(spec, states, make_config(0.01, 5.0), grid(1.0, 5.0), CounterRng(3, 3));
    ASSERT_EQ(rec.times.size(), 6u);
    for (const auto& zs : rec.z)
        for (double z : zs)
            EXPECT_NEAR(z, 1.0, 1e-12);
}

TEST(SimulateReferenceTest, LikelihoodHasUnitMean)
{
    const ModelSpec spec = testing::qnd_qubit();
    const std::vector<DensityMatrix> states = {testing::plus_state()};
    const int n = 4000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const ReferenceRecord rec = simulate_reference(spec, states, make_config(0.01, 0.5),
                                                       std::vector<double>{0.5}, CounterRng(90, i));
        s += rec.z[0][0];
        s2 += rec.z[0][0] * rec.z[0][0];
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    EXPECT_NEAR(mean, 1.0, 4.0 * se);
}

} // namespace
} // namespace qtraj
