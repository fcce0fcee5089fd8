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

// Static analysis of the Lindbladian: invariant states, the decaying /
// recurrent split, minimal enclosures with their dual projectors, and the
// purification, identifiability and spectral conditions.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"

namespace qtraj {

enum class Verdict { Holds, Fails, Unknown };

std::string_view to_string(Verdict v);

struct FixedPoints {
    /// Hilbert-Schmidt orthonormal Hermitian basis of the kernel.
    std::vector<HermitianMatrix> basis;
    /// Smallest singular value outside the kernel (infinity when none).
    double gap_singular_value = 0.0;
    double threshold = 0.0;
    bool ambiguous = false;
};

/// Kernel of the Lindbladian. Singular values at or below
/// threshold * max(1, sigma_max) count as zero.
FixedPoints fixed_points(const ModelSpec& spec, double threshold = 1e-9);

/// Kernel of the Heisenberg-picture dual.
FixedPoints dual_fixed_points(const ModelSpec& spec, double threshold = 1e-9);

struct DecayingSubspace {
    ComplexMatrix projector;
    Eigen::Index dim = 0;
    /// Cesaro limit of e^{tL}(I/k).
    ComplexMatrix mean_state;
    /// Nonzero eigenvalues on the imaginary axis were present.
    bool peripheral = false;
};

DecayingSubspace decaying_subspace(const ModelSpec& spec, double threshold = 1e-9);

struct Enclosures {
    /// Orthogonal projectors onto the supports V_i.
    std::vector<ComplexMatrix> projectors;
    /// Invariant state with support exactly V_i.
    std::vector<DensityMatrix> states;
    /// False when the fixed-point space is larger than the span of the
    /// minimal states, in which case other orthogonal splittings exist.
    bool unique = true;
    std::vector<std::string> warnings;
};

/// Splits the space into minimal enclosures. Throws UnsupportedModel when
/// the decaying subspace is nonzero.
Enclosures minimal_enclosures(const ModelSpec& spec, double threshold = 1e-9);

struct DualProjectors {
    std::vector<HermitianMatrix> projectors;
    double condition = 1.0;
    /// ||sum M_i - I||_F
    double completeness_residual = 0.0;
    /// max_i ||M_i^2 - M_i||_F
    double idempotency_residual = 0.0;
    std::vector<std::string> warnings;
};

/// Elements of ker L* biorthogonal to the minimal invariant states.
DualProjectors dual_projectors(const ModelSpec& spec, const Enclosures& enclosures, double threshold = 1e-9);

/// Eigenvalues of the Lindbladian, sorted by decreasing real part.
std::vector<Complex> liouvillian_spectrum(const ModelSpec& spec);

/// True iff no eigenvalue lies on the imaginary axis away from zero.
bool check_spectral(const ModelSpec& spec, double tol = 1e-7);

struct Identifiability {
    bool identifiable = true;
    /// table[u][c]: tr((L_c + L_c*) rho^u) for diffusive channels, then
    /// tr(C_c rho^u C_c*) for jump channels.
    std::vector<std::vector<double>> table;
    /// First pair of states no channel separates.
    std::optional<std::pair<std::size_t, std::size_t>> witness;
};

Identifiability check_identifiability(const ModelSpec& spec, const std::vector<DensityMatrix>& states,
                                      double tol = 1e-6);

struct PurificationOptions {
    double tol = 1e-9;
    /// Random restarts of the compression search (k > 2 only).
    int search_restarts = 24;
    /// Monte Carlo falsifier (k > 2 only).
    int mc_trajectories = 24;
    double mc_horizon = 60.0;
    double mc_max_dt = 1e-2;
    double mc_rank_one_tol = 1e-4;
    std::uint64_t seed = 20240611;
};

struct Purification {
    Verdict verdict = Verdict::Unknown;
    /// Orthonormal columns spanning a rank >= 2 subspace on which every
    /// reachable S*S compresses to a scalar (for qubits, every L + L* and C*C).
    std::optional<ComplexMatrix> witness;
    /// Largest second eigenvalue of M_T seen by the Monte Carlo prong.
    std::optional<double> mc_second_eigenvalue;
    std::string method;
};

Purification check_purification(const ModelSpec& spec, const PurificationOptions& opts = {});

struct AnalysisOptions {
    double kernel_threshold = 1e-9;
    double spectral_tol = 1e-7;
    double identifiability_tol = 1e-6;
    PurificationOptions purification;
};

struct StructureReport {
    std::vector<HermitianMatrix> fixed_point_basis;
    std::vector<DensityMatrix> invariant_states;
    std::vector<ComplexMatrix> enclosures;
    std::vector<HermitianMatrix> dual_projectors;
    std::vector<Complex> liouvillian_spectrum;
    ComplexMatrix decaying_projector;
    Eigen::Index decaying_dim = 0;
    bool spectral_ok = false;
    bool identifiable = false;
    Identifiability identifiability;
    Purification purification;
    bool unique_decomposition = true;
    /// Set when the model lies outside the supported class (decaying part).
    std::optional<std::string> rejection;
    std::vector<std::string> warnings;
};

StructureReport analyze(const ModelSpec& spec, const AnalysisOptions& opts = {});

} // namespace qtraj
