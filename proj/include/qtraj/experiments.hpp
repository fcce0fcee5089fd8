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

// Monte Carlo experiments over many trajectories: fidelity convergence,
// martingale constancy, the selection law of the limiting enclosure, Cesaro
// agreement and consistency with the master equation.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qtraj/linalg.hpp"
#include "qtraj/model.hpp"
#include "qtraj/sde.hpp"
#include "qtraj/structure.hpp"

namespace qtraj {

enum class ExperimentKind { Fidelity, Martingales, Gamma, Cesaro, MasterEq, Reference };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

/// Pass/fail thresholds. The convergence thresholds are calibration values:
/// the underlying limits come without rates.
struct Tolerances {
    double sigma_band = 3.0;
    double dual_identity = 1e-8;
    bool fidelity_monotone = true;
    std::optional<double> final_fidelity_min;
    std::optional<double> final_fidelity_max;
    double offpair_product_max = 0.02;
    double unresolved_max_fraction = 0.1;
    std::optional<double> cesaro_median_max;
    bool cesaro_monotone = false;
    double gamma_agreement_min = 0.99;
    std::optional<double> limit_distance_max;
    double failure_fraction_max = 0.01;
    double master_eq_dt_factor = 5.0;
};

struct ExperimentConfig {
    std::string name;
    ModelSpec spec;
    DensityMatrix rho0;
    DensityMatrix rho_hat0;
    SimConfig sim;
    std::vector<double> sample_times;
    std::int64_t n_traj = 1;
    std::optional<ExperimentKind> kind;
    double gamma_threshold = 0.95;
    Tolerances tolerances;

    void validate() const;
};

struct Stat {
    double mean = 0.0;
    double se = 0.0;
};

struct Quantiles {
    double median = 0.0;
    double p90 = 0.0;
};

struct SampleRow {
    double time = 0.0;
    Stat fidelity;
    Stat fidelity_via_M;
    double max_dual_discrepancy = 0.0;
    std::vector<Stat> q_rho;
    std::vector<Stat> q_rho_hat;
    /// Entries of the mean state in column-major order.
    std::vector<Stat> rho_re;
    std::vector<Stat> rho_im;
    /// e^{tL}(rho0), master-equation experiments only.
    std::vector<double> exact_re;
    std::vector<double> exact_im;
    /// Trace distance between the two Cesaro means.
    Quantiles cesaro_distance;
    /// Distance of each Cesaro mean to sum_i Q_i(t) rho_inf^i.
    Quantiles true_limit_distance;
    Quantiles estimated_limit_distance;
    /// Likelihoods under the reference measure, one per reference state.
    std::vector<Stat> z;
};

struct TrajectoryRecord {
    std::int64_t index = 0;
    bool failed = false;
    std::string failure;
    /// Enclosure selected by Q^rho (resp. Q^rho_hat) at the horizon, -1 when unresolved.
    int gamma_rho = -1;
    int gamma_rho_hat = -1;
    double final_fidelity = 0.0;
    std::vector<double> q_rho;
    std::vector<double> q_rho_hat;
    std::vector<std::int64_t> jump_counts;
    ComplexMatrix cesaro_rho;
    ComplexMatrix cesaro_rho_hat;
};

struct GammaLaw {
    std::vector<double> expected;
    std::vector<double> empirical;
    std::vector<double> band;
    double unresolved_fraction = 0.0;
    double max_offpair_product = 0.0;
};

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
    /// False for checks recorded for information on models outside the
    /// assumptions the corresponding statement relies on.
    bool enforced = true;
};

struct MonteCarloSummary {
    std::string name;
    ExperimentKind kind = ExperimentKind::Fidelity;
    std::uint64_t seed = 0;
    std::int64_t n_traj = 0;
    std::int64_t n_failed = 0;
    Eigen::Index dim = 0;
    std::size_t num_enclosures = 0;
    std::size_t num_jump = 0;
    std::size_t num_reference_states = 0;
    std::vector<SampleRow> rows;
    std::vector<TrajectoryRecord> trajectories;
    std::optional<GammaLaw> gamma;
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    bool theorem_backed = true;
    double wall_seconds = 0.0;

    bool passed() const;
    /// First enforced check that failed.
    const Check* first_failure() const;
};

struct RunOptions {
    /// Zero selects the default: QTRAJ_WORKERS from the environment, else 1.
    unsigned workers = 0;
};

unsigned default_workers();

MonteCarloSummary run_fidelity(const ExperimentConfig& cfg, const RunOptions& opts = {});
MonteCarloSummary run_martingales(const ExperimentConfig& cfg, const StructureReport& structure,
                                  const RunOptions& opts = {});
MonteCarloSummary run_gamma(const ExperimentConfig& cfg, const StructureReport& structure, const RunOptions& opts = {});
MonteCarloSummary run_cesaro(const ExperimentConfig& cfg, const StructureReport& structure, const RunOptions& opts = {});
MonteCarloSummary run_master_eq(const ExperimentConfig& cfg, const RunOptions& opts = {});
/// Likelihoods Z_t under the reference measure for rho0 and rho_hat0.
MonteCarloSummary run_reference(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Dispatches on cfg.kind, running the structure analysis when needed.
MonteCarloSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

} // namespace qtraj
