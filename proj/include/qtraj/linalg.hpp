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

// Dense complex linear algebra for the small dimensions used throughout
// (k <= 8 system dimension, k^2 <= 64 for superoperators).

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace qtraj {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr int kMaxDim = 8;

/// Self-adjoint matrix. Construction symmetrizes the input as (A + A*)/2.
class HermitianMatrix {
public:
    explicit HermitianMatrix(const ComplexMatrix& a);

    const ComplexMatrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }

protected:
    struct Trusted {};
    HermitianMatrix(ComplexMatrix a, Trusted) : m_(std::move(a)) {}

    ComplexMatrix m_;
};

/// Positive semidefinite, unit trace Hermitian matrix.
///
/// The checked constructor rejects eigenvalues below -1e-10 and traces more
/// than 1e-10 away from one. assume_valid() skips the eigen-decomposition and
/// is meant for values that are valid by construction (normalized congruences
/// S rho S*); it still symmetrizes.
class DensityMatrix : public HermitianMatrix {
public:
    explicit DensityMatrix(const ComplexMatrix& a);

    static DensityMatrix assume_valid(ComplexMatrix a);
    static DensityMatrix maximally_mixed(Eigen::Index dim);
    static DensityMatrix pure(const ComplexVector& psi);

private:
    DensityMatrix(ComplexMatrix a, Trusted t) : HermitianMatrix(std::move(a), t) {}
};

inline constexpr double kEigenTolerance = 1e-10;
inline constexpr double kPsdClip = 1e-10;

struct EigenDecomposition {
    RealVector values;     // ascending
    ComplexMatrix vectors; // orthonormal columns
};

EigenDecomposition eig_hermitian(const HermitianMatrix& a);

/// Principal square root of a PSD matrix. Eigenvalues down to -1e-8 are
/// treated as roundoff and clipped to zero; anything below throws NotPsdError.
/// Eigenvalues within 8 k machine epsilons of the largest map to zero.
HermitianMatrix herm_sqrt(const HermitianMatrix& a);

/// F(rho, sigma) = tr^2 sqrt(sqrt(rho) sigma sqrt(rho)), clamped to [0, 1].
/// Evaluated as the squared nuclear norm of sqrt(rho) sqrt(sigma).
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

/// Scaling and squaring with a degree-13 Pade approximant.
ComplexMatrix expm(const ComplexMatrix& a);

/// Clip negative eigenvalues and renormalize the trace. A matrix that is
/// already a valid density matrix is returned unchanged.
DensityMatrix project_to_density(const HermitianMatrix& a);

struct KernelInclusion {
    bool holds = false;
    /// Smallest c with rho <= c rho_hat on the support of rho_hat.
    double c = 0.0;
    /// Eigenvector of rho_hat in its numerical kernel that rho charges, when
    /// the inclusion fails.
    std::optional<ComplexVector> witness;
};

/// Checks ker(rho_hat) in ker(rho).
KernelInclusion kernel_inclusion(const DensityMatrix& rho_hat, const DensityMatrix& rho, double tol);

// Small helpers shared by the other modules.

Complex trace(const ComplexMatrix& a);
ComplexMatrix dagger(const ComplexMatrix& a);
ComplexMatrix hermitian_part(const ComplexMatrix& a);
bool all_finite(const ComplexMatrix& a);

/// Half the trace norm of (a - b); both Hermitian.
double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b);

/// Orthogonal projector onto the span of the given orthonormal columns.
ComplexMatrix projector_onto(const ComplexMatrix& columns);

/// Column-stacking vectorization and its inverse.
ComplexVector vec(const ComplexMatrix& a);
ComplexMatrix unvec(const ComplexVector& v, Eigen::Index dim);

namespace pauli {
ComplexMatrix identity();
ComplexMatrix x();
ComplexMatrix y();
ComplexMatrix z();
/// sigma_- = |0><1|, lowering |1> to |0>.
ComplexMatrix lowering();
ComplexMatrix raising();
} // namespace pauli

} // namespace qtraj
