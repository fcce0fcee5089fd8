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

#include "qtraj/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qtraj/config.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/experiments.hpp"
#include "qtraj/output.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/sde.hpp"
#include "qtraj/structure.hpp"

namespace qtraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

// Maps library errors onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ExperimentAborted& e) {
        err << "assertion failed: " << e.what() << '\n';
        return kExitAssertion;
    } catch (const Error& e) {
        err << "rejected: " << e.what() << '\n';
        return kExitRejected;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    template <class F>
    void write(const std::string& name, F&& fill)
    {
        const fs::path path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        if (!os)
            throw std::runtime_error("cannot write " + path.string());
        os.imbue(std::locale::classic());
        fill(os);
        if (!os)
            throw std::runtime_error("failed writing " + path.string());
        artifacts_.push_back(name);
    }

    const std::vector<std::string>& artifacts() const { return artifacts_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> artifacts_;
};

json manifest_base(const fs::path& config, const ExperimentConfig& cfg, const fs::path& out_dir)
{
    return json{
        {"tool_version", std::string(kToolVersion)},
        {"config_path", config.string()},
        {"config_hash", config_hash(cfg)},
        {"output_dir", out_dir.string()},
    };
}

void write_manifest(ArtifactWriter& writer, json manifest, double seconds)
{
    std::vector<std::string> artifacts = writer.artifacts();
    artifacts.push_back("manifest.json");
    manifest["artifacts"] = artifacts;
    manifest["timings"] = {{"wall_seconds", seconds}};
    writer.write("manifest.json", [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
}

// Dual projectors for the Q columns when the model admits them.
std::vector<HermitianMatrix> try_dual_projectors(const ModelSpec& spec, std::ostream& err)
{
    AnalysisOptions aopts;
    aopts.purification.mc_trajectories = 0;
    try {
        const StructureReport report = analyze(spec, aopts);
        if (report.rejection) {
            err << "note: " << *report.rejection << "; Q columns omitted\n";
            return {};
        }
        return report.dual_projectors;
    } catch (const Error& e) {
        err << "note: structure analysis failed (" << e.what() << "); Q columns omitted\n";
        return {};
    }
}

std::string padded(std::int64_t i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%05lld", static_cast<long long>(i));
    return buf;
}

} // namespace

int cmd_analyze(const fs::path& config, const AnalyzeOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = load_config(config);
        const StructureReport report = analyze(cfg.spec);
        json doc = report_to_json(report);
        doc["config"] = {{"name", cfg.name}, {"hash", config_hash(cfg)}, {"path", config.string()}};
        const std::string text = doc.dump(2) + "\n";
        if (opts.out) {
            if (opts.out->has_parent_path())
                fs::create_directories(opts.out->parent_path());
            std::ofstream os(*opts.out, std::ios::binary);
            if (!os)
                throw std::runtime_error("cannot write " + opts.out->string());
            os << text;
        } else {
            out << text;
        }
        if (report.rejection) {
            err << "rejected: " << *report.rejection << '\n';
            return int{kExitRejected};
        }
        for (const auto& w : report.warnings)
            err << "warning: " << w << '\n';
        return int{kExitOk};
    });
}

int cmd_simulate(const fs::path& config, const SimulateOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const auto start = Clock::now();
        ExperimentConfig cfg = load_config(config);
        if (opts.seed)
            cfg.sim.seed = *opts.seed;
        if (opts.trajectories < 1)
            throw InvalidArgument("--trajectories must be positive");
        validate_for_model(cfg.sim, cfg.spec);
        const std::vector<HermitianMatrix> duals = try_dual_projectors(cfg.spec, err);

        ArtifactWriter writer(opts.out_dir);
        auto simulate = [&](std::int64_t i) {
            return simulate_pair(cfg.spec, cfg.rho0, cfg.rho_hat0, duals, cfg.sim, cfg.sample_times,
                                 CounterRng(cfg.sim.seed, static_cast<std::uint64_t>(i)));
        };
        if (opts.combined) {
            writer.write(cfg.name + "_trajectories.csv", [&](std::ostream& os) {
                write_path_header(os, duals.size(), cfg.spec.num_jump(), true);
                for (std::int64_t i = 0; i < opts.trajectories; ++i)
                    write_path_rows(os, simulate(i), i);
            });
        } else {
            for (std::int64_t i = 0; i < opts.trajectories; ++i) {
                const PathRecord path = simulate(i);
                writer.write(cfg.name + "_traj_" + padded(i) + ".csv", [&](std::ostream& os) {
                    write_path_header(os, duals.size(), cfg.spec.num_jump(), false);
                    write_path_rows(os, path, std::nullopt);
                });
            }
        }
        json manifest = manifest_base(config, cfg, writer.dir());
        manifest["command"] = "simulate";
        manifest["seed"] = cfg.sim.seed;
        manifest["trajectories"] = opts.trajectories;
        write_manifest(writer, manifest, std::chrono::duration<double>(Clock::now() - start).count());
        for (const auto& a : writer.artifacts())
            out << (writer.dir() / a).string() << '\n';
        return int{kExitOk};
    });
}

int cmd_experiment(const fs::path& config, const ExperimentOptions& opts, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const ExperimentConfig cfg = load_config(config);
        if (!cfg.kind)
            throw ConfigError("experiment.kind: missing required field");
        const MonteCarloSummary summary = run_experiment(cfg, RunOptions{opts.workers});

        ArtifactWriter writer(opts.out_dir);
        writer.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, summary); });
        writer.write("checks.csv", [&](std::ostream& os) { write_checks_csv(os, summary); });
        writer.write("trajectories.csv", [&](std::ostream& os) { write_trajectories_csv(os, summary); });
        if (summary.gamma)
            writer.write("gamma.csv", [&](std::ostream& os) { write_gamma_csv(os, *summary.gamma); });

        json manifest = manifest_base(config, cfg, writer.dir());
        manifest["command"] = "experiment";
        manifest["experiment"] = std::string(to_string(summary.kind));
        manifest["seed"] = summary.seed;
        manifest["trajectories"] = summary.n_traj;
        manifest["failed_trajectories"] = summary.n_failed;
        manifest["theorem_backed"] = summary.theorem_backed;
        manifest["warnings"] = summary.warnings;
        manifest["note"] = "convergence thresholds are calibration values; the limits they test come without rates";
        if (summary.gamma)
            manifest["gamma"] = {{"unresolved_fraction", summary.gamma->unresolved_fraction},
                                 {"max_offpair_product", summary.gamma->max_offpair_product}};
        write_manifest(writer, manifest, summary.wall_seconds);

        for (const Check& c : summary.checks) {
            out << (c.passed ? "PASS " : "FAIL ") << c.name << " value=" << format_double(c.value)
                << " threshold=" << format_double(c.threshold) << (c.enforced ? "" : " (exploratory)") << '\n';
        }
        for (const auto& w : summary.warnings)
            err << "warning: " << w << '\n';
        if (const Check* failed = summary.first_failure()) {
            err << "assertion failed: " << failed->name << " = " << format_double(failed->value)
                << " (threshold " << format_double(failed->threshold) << ")\n";
            return int{kExitAssertion};
        }
        return int{kExitOk};
    });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quantum trajectory filter stability toolkit", "qtraj"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config;
    AnalyzeOptions analyze_opts;
    std::string analyze_out;
    auto* analyze_cmd = app.add_subcommand("analyze", "Structure report of the model in a config");
    analyze_cmd->add_option("config", config, "Config file")->required();
    analyze_cmd->add_option("--out", analyze_out, "Write the report to this file");

    SimulateOptions sim_opts;
    std::uint64_t seed = 0;
    std::string sim_out = ".";
    auto* simulate_cmd = app.add_subcommand("simulate", "Integrate trajectories and write per-path CSV");
    simulate_cmd->add_option("config", config, "Config file")->required();
    simulate_cmd->add_option("--trajectories", sim_opts.trajectories, "Number of trajectories")
        ->check(CLI::PositiveNumber);
    auto* seed_opt = simulate_cmd->add_option("--seed", seed, "Override the configured seed");
    simulate_cmd->add_option("--out", sim_out, "Output directory");
    simulate_cmd->add_flag("--combined", sim_opts.combined, "Write one long-format CSV");

    ExperimentOptions exp_opts;
    std::string exp_out = ".";
    auto* experiment_cmd = app.add_subcommand("experiment", "Run the configured Monte Carlo experiment");
    experiment_cmd->add_option("config", config, "Config file")->required();
    experiment_cmd->add_option("--out", exp_out, "Output directory");
    experiment_cmd->add_option("--workers", exp_opts.workers, "Worker threads (default: QTRAJ_WORKERS or 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        const int code = app.exit(e, o, r);
        out << o.str();
        err << r.str();
        return code == 0 ? int{kExitOk} : int{kExitInput};
    }

    if (analyze_cmd->parsed()) {
        if (!analyze_out.empty())
            analyze_opts.out = analyze_out;
        return cmd_analyze(config, analyze_opts, out, err);
    }
    if (simulate_cmd->parsed()) {
        if (*seed_opt)
            sim_opts.seed = seed;
        sim_opts.out_dir = sim_out;
        return cmd_simulate(config, sim_opts, out, err);
    }
    exp_opts.out_dir = exp_out;
    return cmd_experiment(config, exp_opts, out, err);
}

} // namespace qtraj
