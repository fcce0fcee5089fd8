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
#include <sstream>

#include <gtest/gtest.h>

#include "qtraj/errors.hpp"
#include "qtraj/experiments.hpp"
#include "qtraj/output.hpp"
#include "test_util.hpp"

namespace qtraj {
namespace {

ExperimentConfig make_experiment(const ModelSpec& spec, const DensityMatrix& rho0, const DensityMatrix& rho_hat0,
                                 ExperimentKind kind, std::int64_t n, double dt, std::vector<double> samples,
                                 std::uint64_t seed = 1)
{
    SimConfig sim;
    sim.dt = dt;
    sim.horizon = samples.back();
    sim.seed = seed;
    return ExperimentConfig{"test", spec, rho0, rho_hat0, sim, std::move(samples), n, kind, 0.95, Tolerances{}};
}

const Check* find_check(const MonteCarloSummary& s, const std::string& name)
{
    for (const auto& c : s.checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

std::string csv_bundle(const MonteCarloSummary& s)
{
    std::ostringstream os;
    write_summary_csv(os, s);
    write_checks_csv(os, s);
    write_trajectories_csv(os, s);
    if (s.gamma)
        write_gamma_csv(os, *s.gamma);
    return os.str();
}

TEST(ExperimentKindTest, NamesRoundTrip)
{
    for (auto kind : {ExperimentKind::Fidelity, ExperimentKind::Martingales, ExperimentKind::Gamma,
                      ExperimentKind::Cesaro, ExperimentKind::MasterEq, ExperimentKind::Reference})
        EXPECT_EQ(parse_experiment_kind(to_string(kind)), kind);
    EXPECT_FALSE(parse_experiment_kind("bogus").has_value());
}

TEST(ExperimentConfigTest, Validation)
{
    ExperimentConfig cfg = make_experiment(testing::qnd_qubit(), testing::plus_state(),
                                           DensityMatrix::maximally_mixed(2), ExperimentKind::Fidelity, 4, 0.01,
                                           {0.0, 0.5, 1.0});
    EXPECT_NO_THROW(cfg.validate());
    cfg.sample_times = {0.0, 0.5, 0.5};
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.sample_times = {0.0, 1.0};
    cfg.n_traj = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.n_traj = 4;
    cfg.rho_hat0 = testing::basis_state(2, 0);
    EXPECT_THROW(cfg.validate(), DegenerateStateError);
}

TEST(RunFidelityTest, MatchedEstimateGivesUnitFidelity)
{
    const ExperimentConfig cfg = make_experiment(testing::qnd_qubit(), testing::plus_state(), testing::plus_state(),
                                                 ExperimentKind::Fidelity, 8, 0.01, {0.0, 1.0, 2.0});
    const MonteCarloSummary s = run_fidelity(cfg);
    for (const auto& row : s.rows) {
        EXPECT_NEAR(row.fidelity.mean, 1.0, 1e-10);
        EXPECT_NEAR(row.fidelity.se, 0.0, 1e-10);
    }
    EXPECT_TRUE(s.passed());
    ASSERT_NE(find_check(s, "dual_fidelity_identity"), nullptr);
}

TEST(RunFidelityTest, BitIdenticalAcrossWorkerCounts)
{
    const ExperimentConfig cfg = make_experiment(ModelSpec(0.5 * pauli::x(), {0.5 * pauli::z()}, {pauli::lowering()}),
                                                 testing::plus_state(), DensityMatrix::maximally_mixed(2),
                                                 ExperimentKind::Fidelity, 37, 0.01, {0.0, 0.5, 1.0}, 5);
    const std::string one = csv_bundle(run_fidelity(cfg, RunOptions{1}));
    const std::string four = csv_bundle(run_fidelity(cfg, RunOptions{4}));
    const std::string again = csv_bundle(run_fidelity(cfg, RunOptions{4}));
    EXPECT_EQ(one, four);
    EXPECT_EQ(four, again);
}

TEST(RunGammaTest, InvariantInitialStateAlwaysSelectsItsEnclosure)
{
    const ModelSpec spec = testing::qnd_qubit();
    const ExperimentConfig cfg = make_experiment(spec, testing::basis_state(2, 0), DensityMatrix::maximally_mixed(2),
                                                 ExperimentKind::Gamma, 50, 0.01, {0.0, 2.0});
    AnalysisOptions opts;
    opts.purification.mc_trajectories = 0;
    const MonteCarloSummary s = run_gamma(cfg, analyze(spec, opts));
    for (const auto& t : s.trajectories)
        EXPECT_EQ(t.gamma_rho, 0);
    ASSERT_TRUE(s.gamma.has_value());
    EXPECT_DOUBLE_EQ(s.gamma->empirical[0], 1.0);
    EXPECT_DOUBLE_EQ(s.gamma->expected[0], 1.0);
    EXPECT_TRUE(s.passed());
}

TEST(RunGammaTest, GammaIsBitIdenticalAcrossWorkerCounts)
{
    const ModelSpec spec = testing::qnd_qubit();
    const ExperimentConfig cfg = make_experiment(spec, testing::plus_state(), DensityMatrix::maximally_mixed(2),
                                                 ExperimentKind::Gamma, 40, 0.01, {0.0, 1.0, 3.0}, 9);
    AnalysisOptions opts;
    opts.purification.mc_trajectories = 0;
    const StructureReport report = analyze(spec, opts);
    EXPECT_EQ(csv_bundle(run_gamma(cfg, report, RunOptions{1})), csv_bundle(run_gamma(cfg, report, RunOptions{4})));
}

TEST(RunReferenceTest, IdentityJumpHasConstantLikelihood)
{
    const ModelSpec spec(ComplexMatrix::Zero(2, 2), {}, {pauli::identity()});
    const ExperimentConfig cfg = make_experiment(spec, testing::plus_state(), DensityMatrix::maximally_mixed(2),
                                                 ExperimentKind::Reference, 20, 0.01, {0.0, 1.0, 2.0});
    const MonteCarloSummary s = run_reference(cfg);
    for (const auto& row : s.rows) {
        ASSERT_EQ(row.z.size(), 2u);
        for (const auto& z : row.z) {
            EXPECT_NEAR(z.mean, 1.0, 1e-12);
            EXPECT_NEAR(z.se, 0.0, 1e-12);
        }
    }
    EXPECT_TRUE(s.passed());
}

TEST(RunMasterEqTest, InitialRowIsExactAndDecayMatches)
{
    const ExperimentConfig cfg = make_experiment(testing::amplitude_damping(), testing::basis_state(2, 1),
                                                 DensityMatrix::maximally_mixed(2), ExperimentKind::MasterEq, 2000,
                                                 0.005, {0.0, 0.5, 1.0});
    const MonteCarloSummary s = run_master_eq(cfg);
    ASSERT_EQ(s.rows.size(), 3u);
    for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_EQ(s.rows[0].rho_re[e].mean, s.rows[0].exact_re[e]);
        EXPECT_EQ(s.rows[0].rho_re[e].se, 0.0);
    }
    // Column-major entry 3 is <1|rho|1>.
    for (const auto& row : s.rows) {
        EXPECT_NEAR(row.exact_re[3], std::exp(-row.time), 1e-10);
        EXPECT_NEAR(row.rho_re[3].mean, std::exp(-row.time), std::max(4.0 * row.rho_re[3].se, 5.0 * 0.005));
    }
    const Check* c = find_check(s, "master_equation");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->passed);
}

TEST(RunCesaroTest, BlockModelIsNotTheoremBacked)
{
    const ModelSpec spec = testing::duplicated_blocks();
    ComplexMatrix rho0 = ComplexMatrix::Zero(4, 4);
    rho0(2, 2) = 1.0;
    const ExperimentConfig cfg = make_experiment(spec, DensityMatrix(rho0), DensityMatrix::maximally_mixed(4),
                                                 ExperimentKind::Cesaro, 6, 0.005, {0.0, 2.0});
    AnalysisOptions opts;
    opts.purification.mc_trajectories = 0;
    const MonteCarloSummary s = run_cesaro(cfg, analyze(spec, opts));
    EXPECT_FALSE(s.theorem_backed);
    for (const auto& t : s.trajectories) {
        // The true filter never leaves the lower block.
        EXPECT_NEAR((t.cesaro_rho.bottomRightCorner(2, 2)).trace().real(), 1.0, 1e-12);
        EXPECT_NEAR(t.cesaro_rho_hat.trace().real(), 1.0, 1e-12);
    }
}

TEST(RunMartingalesTest, QComponentsAreConstantForQnd)
{
    const ModelSpec spec = testing::qnd_qubit();
    const ExperimentConfig cfg = make_experiment(spec, DensityMatrix(testing::diag2(0.3, 0.7)),
                                                 DensityMatrix::maximally_mixed(2), ExperimentKind::Martingales, 400,
                                                 0.01, {0.0, 0.5, 1.0}, 3);
    AnalysisOptions opts;
    opts.purification.mc_trajectories = 0;
    const MonteCarloSummary s = run_martingales(cfg, analyze(spec, opts));
    EXPECT_NEAR(s.rows[0].q_rho[0].mean, 0.3, 1e-14);
    const Check* c = find_check(s, "q_martingale");
    ASSERT_NE(c, nullptr);
    EXPECT_TRUE(c->passed) << c->value;
}

TEST(RunExperimentTest, DispatchesOnKind)
{
    ExperimentConfig cfg = make_experiment(testing::qnd_qubit(), testing::plus_state(),
                                           DensityMatrix::maximally_mixed(2), ExperimentKind::Fidelity, 4, 0.01,
                                           {0.0, 1.0});
    EXPECT_EQ(run_experiment(cfg).kind, ExperimentKind::Fidelity);
    cfg.kind.reset();
    EXPECT_THROW(run_experiment(cfg), InvalidArgument);
}

TEST(MonteCarloSummaryTest, FirstFailureSkipsUnenforcedChecks)
{
    MonteCarloSummary s;
    s.checks.push_back({"a", 1.0, 0.0, false, false});
    s.checks.push_back({"b", 1.0, 2.0, true, true});
    EXPECT_TRUE(s.passed());
    EXPECT_EQ(s.first_failure(), nullptr);
    s.checks.push_back({"c", 3.0, 2.0, false, true});
    EXPECT_FALSE(s.passed());
    ASSERT_NE(s.first_failure(), nullptr);
    EXPECT_EQ(s.first_failure()->name, "c");
}

} // namespace
} // namespace qtraj
