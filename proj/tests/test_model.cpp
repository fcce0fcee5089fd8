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

#include <gtest/gtest.h>

#include "qtraj/errors.hpp"
#include "qtraj/model.hpp"
#include "test_util.hpp"

namespace qtraj {
namespace {

ModelSpec random_model(Eigen::Index k, std::size_t p, std::size_t m, std::mt19937_64& gen)
{
    const ComplexMatrix g = testing::ginibre(k, k, gen);
    std::vector<ComplexMatrix> ls, cs;
    for (std::size_t i = 0; i < p; ++i)
        ls.push_back(0.5 * testing::ginibre(k, k, gen));
    for (std::size_t j = 0; j < m; ++j)
        cs.push_back(0.5 * testing::ginibre(k, k, gen));
    return ModelSpec(0.5 * (g + g.adjoint()), ls, cs);
}

TEST(ModelSpecTest, Validation)
{
    const ComplexMatrix z2 = ComplexMatrix::Zero(2, 2);
    EXPECT_THROW(ModelSpec(z2, {}, {}), InvalidArgument);
    EXPECT_THROW(ModelSpec(ComplexMatrix::Zero(2, 3), {pauli::z()}, {}), InvalidArgument);
    EXPECT_THROW(ModelSpec(ComplexMatrix::Zero(9, 9), {ComplexMatrix::Identity(9, 9)}, {}), InvalidArgument);
    EXPECT_THROW(ModelSpec(pauli::lowering(), {pauli::z()}, {}), InvalidArgument);
    EXPECT_THROW(ModelSpec(z2, {ComplexMatrix::Identity(3, 3)}, {}), InvalidArgument);
    ComplexMatrix bad = pauli::z();
    bad(0, 1) = Complex(NAN, 0.0);
    EXPECT_THROW(ModelSpec(z2, {}, {bad}), InvalidArgument);
    EXPECT_NO_THROW(ModelSpec(z2, {}, {pauli::lowering()}));
}

TEST(ModelSpecTest, ErrorNamesOffendingChannel)
{
    try {
        ModelSpec(ComplexMatrix::Zero(2, 2), {pauli::z()}, {pauli::z(), ComplexMatrix::Zero(3, 3)});
        FAIL() << "expected InvalidArgument";
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("jump[1]"), std::string::npos) << e.what();
    }
}

TEST(LindbladianTest, SuperoperatorAgreesWithDirectApplication)
{
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index k = 2 + trial % 4;
        const ModelSpec spec = random_model(k, trial % 3, 1 + trial % 2, gen);
        const ComplexMatrix x = testing::ginibre(k, k, gen);
        const Superoperator l = lindbladian(spec);
        const Superoperator la = adjoint_lindbladian(spec);
        EXPECT_LT((l.apply(x) - apply_lindbladian(spec, x)).norm(), 1e-12);
        EXPECT_LT((la.apply(x) - apply_adjoint_lindbladian(spec, x)).norm(), 1e-12);
        // The dual superoperator is the matrix adjoint under the trace pairing.
        EXPECT_LT((la.matrix - l.matrix.adjoint()).norm(), 1e-12);
    }
}

TEST(LindbladianTest, DualityUnderTracePairing)
{
    std::mt19937_64 gen(22);
    const ModelSpec spec = random_model(3, 1, 2, gen);
    const ComplexMatrix a = testing::ginibre(3, 3, gen);
    const ComplexMatrix rho = testing::random_density(3, 3, gen).matrix();
    const Complex lhs = (apply_adjoint_lindbladian(spec, a) * rho).trace();
    const Complex rhs = (a * apply_lindbladian(spec, rho)).trace();
    EXPECT_LT(std::abs(lhs - rhs), 1e-12);
}

TEST(LindbladianTest, TracePreservingAndUnital)
{
    std::mt19937_64 gen(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index k = 1 + trial % 5;
        const ModelSpec spec = random_model(k, 1 + trial % 2, trial % 3, gen);
        const ComplexMatrix x = testing::ginibre(k, k, gen);
        EXPECT_LT(std::abs(apply_lindbladian(spec, x).trace()), 1e-12);
        EXPECT_LT(apply_adjoint_lindbladian(spec, ComplexMatrix::Identity(k, k)).norm(), 1e-12);
    }
}

TEST(LindbladianTest, DriftMatchesDefinition)
{
    const ModelSpec spec(pauli::x(), {pauli::z()}, {pauli::lowering()});
    const ComplexMatrix expected = Complex(0.0, -1.0) * pauli::x() -
                                   0.5 * (pauli::identity() + pauli::raising() * pauli::lowering());
    EXPECT_LT((drift_K(spec) - expected).norm(), 1e-15);
}

TEST(EvolveMasterTest, AmplitudeDampingClosedForm)
{
    const ModelSpec spec = testing::amplitude_damping();
    ComplexVector psi(2);
    psi << std::sqrt(0.4), std::sqrt(0.6);
    const DensityMatrix rho0 = DensityMatrix::pure(psi);
    for (double t : {0.0, 0.3, 1.0, 4.0}) {
        const ComplexMatrix r = evolve_master(spec, rho0, t).matrix();
        const double excited = 0.6 * std::exp(-t);
        EXPECT_NEAR(r(1, 1).real(), excited, 1e-12);
        EXPECT_NEAR(r(0, 0).real(), 1.0 - excited, 1e-12);
        EXPECT_NEAR(std::abs(r(0, 1)), std::sqrt(0.24) * std::exp(-t / 2.0), 1e-12);
    }
}

TEST(EvolveMasterTest, DephasingClosedForm)
{
    const ModelSpec spec = testing::qnd_qubit();
    const DensityMatrix rho0 = testing::plus_state();
    for (double t : {0.1, 1.0, 3.0}) {
        const ComplexMatrix r = evolve_master(spec, rho0, t).matrix();
        EXPECT_NEAR(r(0, 1).real(), 0.5 * std::exp(-2.0 * t), 1e-12);
        EXPECT_NEAR(r(0, 0).real(), 0.5, 1e-12);
    }
}

TEST(EvolveMasterTest, SemigroupProperty)
{
    std::mt19937_64 gen(24);
    const ModelSpec spec = random_model(3, 1, 1, gen);
    const DensityMatrix rho = testing::random_density(3, 2, gen);
    const DensityMatrix a = evolve_master(spec, evolve_master(spec, rho, 0.4), 0.7);
    const DensityMatrix b = evolve_master(spec, rho, 1.1);
    EXPECT_LT((a.matrix() - b.matrix()).norm(), 1e-11);
}

TEST(EvolveMasterTest, RejectsBadArguments)
{
    const ModelSpec spec = testing::qnd_qubit();
    EXPECT_THROW(evolve_master(spec, testing::plus_state(), -1.0), InvalidArgument);
    EXPECT_THROW(evolve_master(spec, DensityMatrix::maximally_mixed(3), 1.0), InvalidArgument);
}

TEST(ModelSpecTest, ConjugationRotatesGenerator)
{
    std::mt19937_64 gen(25);
    const ModelSpec spec = random_model(3, 1, 1, gen);
    const ComplexMatrix u = testing::random_unitary(3, gen);
    const ModelSpec rotated = spec.conjugated(u);
    const ComplexMatrix rho = testing::random_density(3, 3, gen).matrix();
    const ComplexMatrix lhs = apply_lindbladian(rotated, u * rho * u.adjoint());
    const ComplexMatrix rhs = u * apply_lindbladian(spec, rho) * u.adjoint();
    EXPECT_LT((lhs - rhs).norm(), 1e-12);
}

TEST(KronTest, ColumnStackingIdentity)
{
    std::mt19937_64 gen(26);
    const ComplexMatrix a = testing::ginibre(3, 3, gen);
    const ComplexMatrix b = testing::ginibre(3, 3, gen);
    const ComplexMatrix x = testing::ginibre(3, 3, gen);
    EXPECT_LT((vec(a * x * b) - kron(b.transpose(), a) * vec(x)).norm(), 1e-12);
}

} // namespace
} // namespace qtraj
