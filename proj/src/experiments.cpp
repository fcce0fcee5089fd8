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

#include "qtraj/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qtraj/errors.hpp"
#include "qtraj/rng.hpp"

namespace qtraj {

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::Fidelity, "fidelity"},   {ExperimentKind::Martingales, "martingales"},
    {ExperimentKind::Gamma, "gamma"},         {ExperimentKind::Cesaro, "cesaro"},
    {ExperimentKind::MasterEq, "master_eq"},  {ExperimentKind::Reference, "reference"},
};

} // namespace

std::string_view to_string(ExperimentKind kind)
{
    for (const auto& [k, name] : kKindNames) {
        if (k == kind)
            return name;
    }
    return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name)
{
    for (const auto& [k, n] : kKindNames) {
        if (n == name)
            return k;
    }
    return std::nullopt;
}

void ExperimentConfig::validate() const
{
    sim.validate();
    if (n_traj < 1)
        throw InvalidArgument("experiment.trajectories must be positive");
    if (!(gamma_threshold > 0.5 && gamma_threshold < 1.0))
        throw InvalidArgument("experiment.gamma_threshold must lie in (0.5, 1)");
    if (rho0.dim() != spec.dim() || rho_hat0.dim() != spec.dim())
        throw InvalidArgument("initial states must match the model dimension");
    if (sample_times.empty())
        throw InvalidArgument("sample_times must not be empty");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        const double t = sample_times[i];
        if (t < 0.0 || t > sim.horizon * (1.0 + 1e-12))
            throw InvalidArgument("sample_times must lie in [0, horizon]");
        if (i > 0 && !(t > sample_times[i - 1]))
            throw InvalidArgument("sample_times must be strictly increasing");
    }
    require_kernel_inclusion(rho_hat0, rho0);
}

bool MonteCarloSummary::passed() const
{
    return first_failure() == nullptr;
}

const Check* MonteCarloSummary::first_failure() const
{
    for (const auto& c : checks) {
        if (c.enforced && !c.passed)
            return &c;
    }
    return nullptr;
}

unsigned default_workers()
{
    if (const char* env = std::getenv("QTRAJ_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0 && v <= 1024)
            return static_cast<unsigned>(v);
    }
    return 1;
}

namespace {

using Clock = std::chrono::steady_clock;

// Runs fn(i) for i in [0, n) on a pool of workers. Results are stored by
// index, so the outcome does not depend on scheduling. Library errors are
// recorded per index; anything else is rethrown after the pool drains.
template <class R, class F>
std::vector<std::optional<R>> parallel_map(std::int64_t n, unsigned workers, F&& fn, std::vector<std::string>& errors)
{
    std::vector<std::optional<R>> results(static_cast<std::size_t>(n));
    errors.assign(static_cast<std::size_t>(n), std::string());
    std::atomic<std::int64_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    auto work = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                results[static_cast<std::size_t>(i)] = fn(i);
            } catch (const Error& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            } catch (...) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal)
                    fatal = std::current_exception();
                next.store(n);
            }
        }
    };

    const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::int64_t>(n, 1))));
    if (count == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(count);
        for (unsigned w = 0; w < count; ++w)
            pool.emplace_back(work);
        for (auto& t : pool)
            t.join();
    }
    if (fatal)
        std::rethrow_exception(fatal);
    return results;
}

Stat stat_of(const std::vector<double>& xs)
{
    Stat s;
    if (xs.empty())
        return s;
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs)
            ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return s;
}

double quantile(std::vector<double> xs, double q)
{
    if (xs.empty())
        return 0.0;
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

Quantiles quantiles_of(const std::vector<double>& xs)
{
    return Quantiles{quantile(xs, 0.5), quantile(xs, 0.9)};
}

// |mean - target| in units of the standard error; exact agreement is
// required when the standard error vanishes.
double normalized_deviation(const Stat& s, double target)
{
    // Agreement at roundoff level counts as exact, whatever the sample spread.
    const double diff = std::abs(s.mean - target);
    if (diff <= 1e-12 * std::max(1.0, std::abs(target)))
        return 0.0;
    if (s.se > 0.0)
        return diff / s.se;
    return std::numeric_limits<double>::infinity();
}

void add_check(MonteCarloSummary& summary, std::string name, double value, double threshold, bool passed,
               bool enforced = true)
{
    summary.checks.push_back(Check{std::move(name), value, threshold, passed, enforced});
}

int classify(const std::vector<double>& q, double threshold)
{
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] > threshold)
            return static_cast<int>(i);
    }
    return -1;
}

struct PairOutcome {
    std::vector<double> fidelity;
    std::vector<double> fidelity_via_M;
    std::vector<std::vector<double>> q_rho;
    std::vector<std::vector<double>> q_rho_hat;
    std::vector<ComplexMatrix> rho;
    std::vector<double> cesaro_distance;
    std::vector<double> true_limit;
    std::vector<double> estimated_limit;
    TrajectoryRecord record;
};

ComplexMatrix mixture(const std::vector<double>& weights, const std::vector<DensityMatrix>& states)
{
    ComplexMatrix out = ComplexMatrix::Zero(states.front().dim(), states.front().dim());
    for (std::size_t i = 0; i < states.size(); ++i)
        out += weights[i] * states[i].matrix();
    return out;
}

struct PairContext {
    const ExperimentConfig& cfg;
    std::vector<HermitianMatrix> duals;
    std::vector<DensityMatrix> states;
};

PairOutcome run_pair(const PairContext& ctx, std::int64_t index)
{
    const ExperimentConfig& cfg = ctx.cfg;
    const PathRecord path = simulate_pair(cfg.spec, cfg.rho0, cfg.rho_hat0, ctx.duals, cfg.sim, cfg.sample_times,
                                          CounterRng(cfg.sim.seed, static_cast<std::uint64_t>(index)));
    PairOutcome out;
    for (const PathSample& s : path.samples) {
        out.fidelity.push_back(s.fidelity);
        out.fidelity_via_M.push_back(s.fidelity_via_M);
        out.q_rho.push_back(s.q_rho);
        out.q_rho_hat.push_back(s.q_rho_hat);
        out.rho.push_back(s.rho);
        out.cesaro_distance.push_back(trace_distance(s.cesaro_rho, s.cesaro_rho_hat));
        if (!ctx.states.empty()) {
            out.true_limit.push_back(trace_distance(s.cesaro_rho, mixture(s.q_rho, ctx.states)));
            out.estimated_limit.push_back(trace_distance(s.cesaro_rho_hat, mixture(s.q_rho_hat, ctx.states)));
        }
    }
    const PairState& last = path.final_state;
    TrajectoryRecord& rec = out.record;
    rec.index = index;
    rec.final_fidelity = fidelity(last.rho, last.rho_hat);
    rec.q_rho = q_vector(ctx.duals, last.rho.matrix());
    rec.q_rho_hat = q_vector(ctx.duals, last.rho_hat.matrix());
    rec.gamma_rho = classify(rec.q_rho, cfg.gamma_threshold);
    rec.gamma_rho_hat = classify(rec.q_rho_hat, cfg.gamma_threshold);
    rec.jump_counts = last.jump_counts;
    const PathSample& tail = path.samples.back();
    rec.cesaro_rho = tail.cesaro_rho;
    rec.cesaro_rho_hat = tail.cesaro_rho_hat;
    return out;
}

MonteCarloSummary make_summary(const ExperimentConfig& cfg, ExperimentKind kind)
{
    MonteCarloSummary s;
    s.name = cfg.name;
    s.kind = kind;
    s.seed = cfg.sim.seed;
    s.n_traj = cfg.n_traj;
    s.dim = cfg.spec.dim();
    s.num_jump = cfg.spec.num_jump();
    return s;
}

unsigned resolve_workers(const RunOptions& opts)
{
    return opts.workers > 0 ? opts.workers : default_workers();
}

// Collects successful outcomes in index order and enforces the failure cap.
template <class R>
std::vector<R> collect(MonteCarloSummary& summary, const ExperimentConfig& cfg, std::vector<std::optional<R>>& results,
                       const std::vector<std::string>& errors)
{
    std::vector<R> ok;
    ok.reserve(results.size());
    std::string first_error;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i]) {
            ok.push_back(std::move(*results[i]));
        } else {
            ++summary.n_failed;
            TrajectoryRecord rec;
            rec.index = static_cast<std::int64_t>(i);
            rec.failed = true;
            rec.failure = errors[i];
            summary.trajectories.push_back(std::move(rec));
            if (first_error.empty())
                first_error = errors[i];
        }
    }
    const double fraction = static_cast<double>(summary.n_failed) / static_cast<double>(cfg.n_traj);
    if (fraction > cfg.tolerances.failure_fraction_max) {
        std::ostringstream msg;
        msg << summary.n_failed << " of " << cfg.n_traj << " trajectories failed; first failure: " << first_error;
        throw ExperimentAborted(msg.str());
    }
    if (summary.n_failed > 0)
        summary.warnings.push_back(std::to_string(summary.n_failed) +
                                   " trajectories failed and were excluded; first failure: " + first_error);
    if (ok.empty())
        throw ExperimentAborted("no trajectory completed");
    return ok;
}

std::vector<double> column(const std::vector<PairOutcome>& outs, std::vector<double> PairOutcome::*field, std::size_t t)
{
    std::vector<double> xs;
    xs.reserve(outs.size());
    for (const auto& o : outs)
        xs.push_back((o.*field)[t]);
    return xs;
}

std::vector<Stat> q_stats(const std::vector<PairOutcome>& outs, std::vector<std::vector<double>> PairOutcome::*field,
                          std::size_t t, std::size_t K)
{
    std::vector<Stat> stats;
    for (std::size_t i = 0; i < K; ++i) {
        std::vector<double> xs;
        xs.reserve(outs.size());
        for (const auto& o : outs)
            xs.push_back((o.*field)[t][i]);
        stats.push_back(stat_of(xs));
    }
    return stats;
}

// Runs every trajectory and assembles the per-sample aggregates shared by
// all experiments that integrate the (true, estimated) pair.
std::vector<PairOutcome> run_pairs(MonteCarloSummary& summary, const ExperimentConfig& cfg,
                                   const StructureReport* structure, const RunOptions& opts)
{
    cfg.validate();
    validate_for_model(cfg.sim, cfg.spec);
    PairContext ctx{cfg, {}, {}};
    if (structure) {
        ctx.duals = structure->dual_projectors;
        ctx.states = structure->invariant_states;
    }
    summary.num_enclosures = ctx.states.size();
    std::vector<std::string> errors;
    auto results = parallel_map<PairOutcome>(
        cfg.n_traj, resolve_workers(opts), [&](std::int64_t i) { return run_pair(ctx, i); }, errors);
    std::vector<PairOutcome> outs = collect(summary, cfg, results, errors);

    const std::size_t K = ctx.duals.size();
    const Eigen::Index k = cfg.spec.dim();
    for (std::size_t t = 0; t < cfg.sample_times.size(); ++t) {
        SampleRow row;
        row.time = static_cast<double>(cfg.sim.step_index(cfg.sample_times[t])) * cfg.sim.dt;
        row.fidelity = stat_of(column(outs, &PairOutcome::fidelity, t));
        row.fidelity_via_M = stat_of(column(outs, &PairOutcome::fidelity_via_M, t));
        for (const auto& o : outs)
            row.max_dual_discrepancy = std::max(row.max_dual_discrepancy, std::abs(o.fidelity[t] - o.fidelity_via_M[t]));
        row.q_rho = q_stats(outs, &PairOutcome::q_rho, t, K);
        row.q_rho_hat = q_stats(outs, &PairOutcome::q_rho_hat, t, K);
        for (Eigen::Index c = 0; c < k; ++c) {
            for (Eigen::Index r = 0; r < k; ++r) {
                std::vector<double> re, im;
                re.reserve(outs.size());
                im.reserve(outs.size());
                for (const auto& o : outs) {
                    re.push_back(o.rho[t](r, c).real());
                    im.push_back(o.rho[t](r, c).imag());
                }
                row.rho_re.push_back(stat_of(re));
                row.rho_im.push_back(stat_of(im));
            }
        }
        row.cesaro_distance = quantiles_of(column(outs, &PairOutcome::cesaro_distance, t));
        if (!ctx.states.empty()) {
            row.true_limit_distance = quantiles_of(column(outs, &PairOutcome::true_limit, t));
            row.estimated_limit_distance = quantiles_of(column(outs, &PairOutcome::estimated_limit, t));
        }
        summary.rows.push_back(std::move(row));
    }
    for (const auto& o : outs)
        summary.trajectories.push_back(o.record);
    std::sort(summary.trajectories.begin(), summary.trajectories.end(),
              [](const TrajectoryRecord& a, const TrajectoryRecord& b) { return a.index < b.index; });
    return outs;
}

void check_dual_identity(MonteCarloSummary& summary, const ExperimentConfig& cfg)
{
    double worst = 0.0;
    for (const auto& row : summary.rows)
        worst = std::max(worst, row.max_dual_discrepancy);
    add_check(summary, "dual_fidelity_identity", worst, cfg.tolerances.dual_identity,
              worst <= cfg.tolerances.dual_identity);
}

// Submartingale property: paired per-trajectory increments of the fidelity
// must not be significantly negative between consecutive sample times.
void check_fidelity_monotone(MonteCarloSummary& summary, const ExperimentConfig& cfg,
                             const std::vector<PairOutcome>& outs)
{
    double worst = 0.0;
    for (std::size_t t = 1; t < cfg.sample_times.size(); ++t) {
        std::vector<double> inc;
        inc.reserve(outs.size());
        for (const auto& o : outs)
            inc.push_back(o.fidelity[t] - o.fidelity[t - 1]);
        const Stat s = stat_of(inc);
        if (s.mean >= 0.0)
            continue;
        worst = std::max(worst, normalized_deviation(s, 0.0));
    }
    add_check(summary, "fidelity_monotone", worst, cfg.tolerances.sigma_band, worst <= cfg.tolerances.sigma_band);
}

void check_q_constancy(MonteCarloSummary& summary, const ExperimentConfig& cfg,
                       const std::vector<HermitianMatrix>& duals)
{
    const std::vector<double> q0 = q_vector(duals, cfg.rho0.matrix());
    double worst = 0.0;
    for (const auto& row : summary.rows)
        for (std::size_t i = 0; i < q0.size(); ++i)
            worst = std::max(worst, normalized_deviation(row.q_rho[i], q0[i]));
    add_check(summary, "q_martingale", worst, cfg.tolerances.sigma_band, worst <= cfg.tolerances.sigma_band);
}

void note_assumptions(MonteCarloSummary& summary, const StructureReport& structure)
{
    summary.theorem_backed = structure.identifiable && structure.spectral_ok;
    if (!structure.identifiable)
        summary.warnings.push_back("identifiability assumption fails; selection and agreement results are exploratory");
    if (!structure.spectral_ok)
        summary.warnings.push_back("spectral assumption fails; selection and agreement results are exploratory");
}

const StructureReport& require_enclosures(const StructureReport& structure)
{
    if (structure.rejection)
        throw UnsupportedModel(*structure.rejection);
    if (structure.dual_projectors.empty())
        throw UnsupportedModel("structure report carries no dual projectors");
    return structure;
}

void finish(MonteCarloSummary& summary, Clock::time_point start)
{
    summary.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

MonteCarloSummary run_fidelity(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto start = Clock::now();
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::Fidelity);
    const std::vector<PairOutcome> outs = run_pairs(summary, cfg, nullptr, opts);
    check_dual_identity(summary, cfg);
    if (cfg.tolerances.fidelity_monotone)
        check_fidelity_monotone(summary, cfg, outs);
    const double final_mean = summary.rows.back().fidelity.mean;
    if (cfg.tolerances.final_fidelity_min)
        add_check(summary, "final_fidelity_min", final_mean, *cfg.tolerances.final_fidelity_min,
                  final_mean >= *cfg.tolerances.final_fidelity_min);
    if (cfg.tolerances.final_fidelity_max)
        add_check(summary, "final_fidelity_max", final_mean, *cfg.tolerances.final_fidelity_max,
                  final_mean <= *cfg.tolerances.final_fidelity_max);
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_martingales(const ExperimentConfig& cfg, const StructureReport& structure,
                                  const RunOptions& opts)
{
    const auto start = Clock::now();
    require_enclosures(structure);
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::Martingales);
    run_pairs(summary, cfg, &structure, opts);
    check_q_constancy(summary, cfg, structure.dual_projectors);
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_gamma(const ExperimentConfig& cfg, const StructureReport& structure, const RunOptions& opts)
{
    const auto start = Clock::now();
    require_enclosures(structure);
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::Gamma);
    note_assumptions(summary, structure);
    const std::vector<PairOutcome> outs = run_pairs(summary, cfg, &structure, opts);
    check_q_constancy(summary, cfg, structure.dual_projectors);

    const std::size_t K = structure.dual_projectors.size();
    const auto n = static_cast<double>(outs.size());
    GammaLaw law;
    law.expected = q_vector(structure.dual_projectors, cfg.rho0.matrix());
    law.empirical.assign(K, 0.0);
    std::int64_t unresolved = 0;
    std::vector<std::vector<double>> products(K, std::vector<double>(K, 0.0));
    for (const auto& o : outs) {
        const TrajectoryRecord& rec = o.record;
        if (rec.gamma_rho < 0)
            ++unresolved;
        else
            law.empirical[static_cast<std::size_t>(rec.gamma_rho)] += 1.0;
        for (std::size_t u = 0; u < K; ++u)
            for (std::size_t v = 0; v < K; ++v)
                products[u][v] += rec.q_rho[u] * rec.q_rho[v];
    }
    for (std::size_t u = 0; u < K; ++u) {
        law.empirical[u] /= n;
        for (std::size_t v = 0; v < K; ++v)
            if (u != v)
                law.max_offpair_product = std::max(law.max_offpair_product, products[u][v] / n);
    }
    law.unresolved_fraction = static_cast<double>(unresolved) / n;

    const double band = cfg.tolerances.sigma_band;
    for (std::size_t i = 0; i < K; ++i) {
        const double p = std::clamp(law.expected[i], 0.0, 1.0);
        law.band.push_back(band * std::sqrt(p * (1.0 - p) / n));
        const double dev = std::abs(law.empirical[i] - law.expected[i]);
        add_check(summary, "gamma_law_" + std::to_string(i + 1), dev, law.band[i], dev <= law.band[i] + 1e-12,
                  summary.theorem_backed);
    }
    add_check(summary, "offpair_product", law.max_offpair_product, cfg.tolerances.offpair_product_max,
              law.max_offpair_product <= cfg.tolerances.offpair_product_max, summary.theorem_backed);
    if (law.unresolved_fraction > cfg.tolerances.unresolved_max_fraction)
        summary.warnings.push_back("unresolved fraction " + std::to_string(law.unresolved_fraction) +
                                   " exceeds the limit; the horizon may be too short");
    summary.gamma = std::move(law);
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_cesaro(const ExperimentConfig& cfg, const StructureReport& structure, const RunOptions& opts)
{
    const auto start = Clock::now();
    require_enclosures(structure);
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::Cesaro);
    note_assumptions(summary, structure);
    const std::vector<PairOutcome> outs = run_pairs(summary, cfg, &structure, opts);
    const Tolerances& tol = cfg.tolerances;

    std::int64_t resolved = 0, agree = 0;
    for (const auto& o : outs) {
        if (o.record.gamma_rho < 0)
            continue;
        ++resolved;
        if (o.record.gamma_rho == o.record.gamma_rho_hat)
            ++agree;
    }
    const double agreement = resolved > 0 ? static_cast<double>(agree) / static_cast<double>(resolved) : 1.0;
    add_check(summary, "gamma_agreement", agreement, tol.gamma_agreement_min, agreement >= tol.gamma_agreement_min,
              summary.theorem_backed);

    const SampleRow& last = summary.rows.back();
    if (tol.cesaro_median_max)
        add_check(summary, "cesaro_median", last.cesaro_distance.median, *tol.cesaro_median_max,
                  last.cesaro_distance.median <= *tol.cesaro_median_max, summary.theorem_backed);
    if (tol.cesaro_monotone) {
        // Largest increase of the median distance across positive sample times.
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 1; t < summary.rows.size(); ++t) {
            if (summary.rows[t - 1].time <= 0.0)
                continue;
            worst = std::max(worst, summary.rows[t].cesaro_distance.median - summary.rows[t - 1].cesaro_distance.median);
        }
        if (!std::isfinite(worst))
            worst = 0.0;
        add_check(summary, "cesaro_monotone", worst, 0.0, worst < 0.0 || summary.rows.size() < 2,
                  summary.theorem_backed);
    }
    if (tol.limit_distance_max) {
        add_check(summary, "true_limit_distance", last.true_limit_distance.median, *tol.limit_distance_max,
                  last.true_limit_distance.median <= *tol.limit_distance_max);
        add_check(summary, "estimated_limit_distance", last.estimated_limit_distance.median, *tol.limit_distance_max,
                  last.estimated_limit_distance.median <= *tol.limit_distance_max);
    }
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_master_eq(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto start = Clock::now();
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::MasterEq);
    run_pairs(summary, cfg, nullptr, opts);
    const double floor = cfg.tolerances.master_eq_dt_factor * cfg.sim.dt;
    double worst = 0.0;
    for (auto& row : summary.rows) {
        const ComplexMatrix exact = evolve_master(cfg.spec, cfg.rho0, row.time).matrix();
        for (Eigen::Index c = 0; c < exact.cols(); ++c) {
            for (Eigen::Index r = 0; r < exact.rows(); ++r) {
                row.exact_re.push_back(exact(r, c).real());
                row.exact_im.push_back(exact(r, c).imag());
            }
        }
        for (std::size_t e = 0; e < row.exact_re.size(); ++e) {
            const double tol_re = std::max(cfg.tolerances.sigma_band * row.rho_re[e].se, floor);
            const double tol_im = std::max(cfg.tolerances.sigma_band * row.rho_im[e].se, floor);
            worst = std::max(worst, std::abs(row.rho_re[e].mean - row.exact_re[e]) / tol_re);
            worst = std::max(worst, std::abs(row.rho_im[e].mean - row.exact_im[e]) / tol_im);
        }
    }
    add_check(summary, "master_equation", worst, 1.0, worst <= 1.0);
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_reference(const ExperimentConfig& cfg, const RunOptions& opts)
{
    const auto start = Clock::now();
    cfg.validate();
    validate_for_model(cfg.sim, cfg.spec, Measure::Reference);
    MonteCarloSummary summary = make_summary(cfg, ExperimentKind::Reference);
    const std::vector<DensityMatrix> states{cfg.rho0, cfg.rho_hat0};
    summary.num_reference_states = states.size();

    std::vector<std::string> errors;
    auto results = parallel_map<ReferenceRecord>(
        cfg.n_traj, resolve_workers(opts),
        [&](std::int64_t i) {
            return simulate_reference(cfg.spec, states, cfg.sim, cfg.sample_times,
                                      CounterRng(cfg.sim.seed, static_cast<std::uint64_t>(i)));
        },
        errors);
    const std::vector<ReferenceRecord> recs = collect(summary, cfg, results, errors);

    for (std::size_t t = 0; t < cfg.sample_times.size(); ++t) {
        SampleRow row;
        row.time = recs.front().times[t];
        for (std::size_t s = 0; s < states.size(); ++s) {
            std::vector<double> zs;
            zs.reserve(recs.size());
            for (const auto& r : recs)
                zs.push_back(r.z[s][t]);
            row.z.push_back(stat_of(zs));
        }
        summary.rows.push_back(std::move(row));
    }
    for (std::size_t s = 0; s < states.size(); ++s) {
        double w = 0.0;
        for (const auto& row : summary.rows)
            w = std::max(w, normalized_deviation(row.z[s], 1.0));
        add_check(summary, s == 0 ? "likelihood_martingale_rho" : "likelihood_martingale_rho_hat", w,
                  cfg.tolerances.sigma_band, w <= cfg.tolerances.sigma_band);
    }
    finish(summary, start);
    return summary;
}

MonteCarloSummary run_experiment(const ExperimentConfig& cfg, const RunOptions& opts)
{
    if (!cfg.kind)
        throw InvalidArgument("experiment.kind is required");
    switch (*cfg.kind) {
    case ExperimentKind::Fidelity:
        return run_fidelity(cfg, opts);
    case ExperimentKind::MasterEq:
        return run_master_eq(cfg, opts);
    case ExperimentKind::Reference:
        return run_reference(cfg, opts);
    case ExperimentKind::Martingales:
    case ExperimentKind::Gamma:
    case ExperimentKind::Cesaro:
        break;
    }
    AnalysisOptions aopts;
    aopts.purification.mc_trajectories = 0;
    const StructureReport structure = analyze(cfg.spec, aopts);
    if (*cfg.kind == ExperimentKind::Martingales)
        return run_martingales(cfg, structure, opts);
    if (*cfg.kind == ExperimentKind::Gamma)
        return run_gamma(cfg, structure, opts);
    return run_cesaro(cfg, structure, opts);
}

} // namespace qtraj
