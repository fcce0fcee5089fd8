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

// Shared helpers for the unit tests: seeded random states and unitaries,
// standard models and an Eigen-independent Jacobi eigensolver used as an
// oracle.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"

namespace qtraj::testing {

inline ComplexMatrix ginibre(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen)
{
    std::normal_distribution<double> n(0.0, 1.0);
    ComplexMatrix g(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            g(i, j) = Complex(n(gen), n(gen));
    return g;
}

inline ComplexMatrix random_unitary(Eigen::Index k, std::mt19937_64& gen)
{
    Eigen::HouseholderQR<ComplexMatrix> qr(ginibre(k, k, gen));
    ComplexMatrix q = qr.householderQ();
    // Fix column phases with the diagonal of R so the law is Haar.
    const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i)
        q.col(i) *= std::abs(r(i, i)) / r(i, i);
    return q;
}

inline DensityMatrix random_density(Eigen::Index k, Eigen::Index rank, std::mt19937_64& gen)
{
    const ComplexMatrix g = ginibre(k, rank, gen);
    ComplexMatrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix(rho);
}

inline ComplexMatrix diag2(double a, double b)
{
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

inline ComplexMatrix block_diag(const ComplexMatrix& a, const ComplexMatrix& b)
{
    ComplexMatrix m = ComplexMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    m.topLeftCorner(a.rows(), a.cols()) = a;
    m.bottomRightCorner(b.rows(), b.cols()) = b;
    return m;
}

inline ModelSpec qnd_qubit()
{
    return ModelSpec(ComplexMatrix::Zero(2, 2), {pauli::z()}, {});
}

inline ModelSpec amplitude_damping()
{
    return ModelSpec(ComplexMatrix::Zero(2, 2), {}, {pauli::lowering()});
}

inline ModelSpec non_purifying_qubit()
{
    return ModelSpec(ComplexMatrix::Zero(2, 2), {Complex(0.0, 1.0) * pauli::x()}, {});
}

inline ModelSpec trivial_noise()
{
    return ModelSpec(pauli::z(), {0.1 * pauli::identity()}, {});
}

/// Two identical copies of a faithful qubit model: dephasing plus decay
/// and excitation at rates gamma_down and gamma_up.
inline ModelSpec duplicated_blocks(double gamma_down = 4.0, double gamma_up = 2.0)
{
    const ComplexMatrix l = 0.5 * pauli::z();
    const ComplexMatrix c1 = std::sqrt(gamma_down) * pauli::lowering();
    const ComplexMatrix c2 = std::sqrt(gamma_up) * pauli::raising();
    return ModelSpec(ComplexMatrix::Zero(4, 4), {block_diag(l, l)}, {block_diag(c1, c1), block_diag(c2, c2)});
}

inline DensityMatrix plus_state()
{
    ComplexVector psi(2);
    psi << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    return DensityMatrix::pure(psi);
}

inline DensityMatrix basis_state(Eigen::Index k, Eigen::Index i)
{
    ComplexVector psi = ComplexVector::Zero(k);
    psi(i) = 1.0;
    return DensityMatrix::pure(psi);
}

/// Cyclic Jacobi eigensolver for real symmetric matrices.
struct JacobiResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

inline JacobiResult jacobi_eigen(Eigen::MatrixXd a)
{
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (off < 1e-30)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    return {a.diagonal(), v};
}

/// Real symmetric embedding [[A, -B], [B, A]] of the Hermitian A + iB.
inline Eigen::MatrixXd real_embedding(const ComplexMatrix& h)
{
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd e(2 * n, 2 * n);
    e << h.real(), -h.imag(), h.imag(), h.real();
    return e;
}

inline Eigen::MatrixXd embedded_sqrt(const Eigen::MatrixXd& e)
{
    const JacobiResult j = jacobi_eigen(e);
    return j.vectors * j.values.cwiseMax(0.0).cwiseSqrt().asDiagonal() * j.vectors.transpose();
}

/// Fidelity computed entirely in the real embedding with Jacobi rotations.
inline double oracle_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma)
{
    const Eigen::MatrixXd root = embedded_sqrt(real_embedding(rho));
    Eigen::MatrixXd inner = root * real_embedding(sigma) * root;
    inner = 0.5 * (inner + inner.transpose());
    const JacobiResult j = jacobi_eigen(inner);
    // Every eigenvalue of the embedding appears twice.
    const double s = 0.5 * j.values.cwiseMax(0.0).cwiseSqrt().sum();
    return s * s;
}

} // namespace qtraj::testing
