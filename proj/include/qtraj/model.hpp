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

#include <vector>

#include "qtraj/linalg.hpp"

namespace qtraj {

/// Measurement model: Hamiltonian H, diffusive channels L_1..L_p and jump
/// channels C_1..C_m (m = n - p in counting-process notation).
class ModelSpec {
public:
    ModelSpec(const ComplexMatrix& hamiltonian,
              std::vector<ComplexMatrix> diffusive_ops,
              std::vector<ComplexMatrix> jump_ops);

    Eigen::Index dim() const { return hamiltonian_.dim(); }
    const HermitianMatrix& hamiltonian() const { return hamiltonian_; }
    const std::vector<ComplexMatrix>& diffusive_ops() const { return diffusive_; }
    const std::vector<ComplexMatrix>& jump_ops() const { return jumps_; }

    std::size_t num_diffusive() const { return diffusive_.size(); }
    std::size_t num_jump() const { return jumps_.size(); }
    std::size_t num_channels() const { return diffusive_.size() + jumps_.size(); }

    /// Same model with every operator conjugated by the unitary u.
    ModelSpec conjugated(const ComplexMatrix& u) const;

private:
    HermitianMatrix hamiltonian_;
    std::vector<ComplexMatrix> diffusive_;
    std::vector<ComplexMatrix> jumps_;
};

/// Linear map on k x k matrices stored as a k^2 x k^2 matrix acting on
/// column-stacked vectors, so that vec(A X B) = (B^T kron A) vec(X).
struct Superoperator {
    Eigen::Index dim = 0;
    ComplexMatrix matrix;

    ComplexMatrix apply(const ComplexMatrix& x) const;
};

/// K = -iH - 1/2 (sum L*L + sum C*C).
ComplexMatrix drift_K(const ModelSpec& spec);

/// The Lindbladian applied directly, operator by operator.
ComplexMatrix apply_lindbladian(const ModelSpec& spec, const ComplexMatrix& rho);

/// Heisenberg-picture dual: tr(L*(A) rho) = tr(A L(rho)).
ComplexMatrix apply_adjoint_lindbladian(const ModelSpec& spec, const ComplexMatrix& a);

Superoperator lindbladian(const ModelSpec& spec);
Superoperator adjoint_lindbladian(const ModelSpec& spec);

/// e^{tL}(rho), via the exponential of the assembled superoperator.
DensityMatrix evolve_master(const ModelSpec& spec, const DensityMatrix& rho, double t);

/// Kronecker product of two dense complex matrices.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

} // namespace qtraj
