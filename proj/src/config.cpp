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

#include "qtraj/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace qtraj {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message)
{
    throw ConfigError(path + ": " + message);
}

std::string child(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i)
{
    return path + "[" + std::to_string(i) + "]";
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> keys)
{
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            fail(child(path, key), "unknown field");
    }
}

const json& require(const json& obj, const std::string& path, const char* key)
{
    if (!obj.is_object())
        fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        fail(child(path, key), "missing required field");
    return *it;
}

double as_number(const json& v, const std::string& path)
{
    if (!v.is_number())
        fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
        fail(path, "expected a finite number");
    return x;
}

bool as_bool(const json& v, const std::string& path)
{
    if (!v.is_boolean())
        fail(path, "expected true or false");
    return v.get<bool>();
}

std::int64_t as_int(const json& v, const std::string& path)
{
    if (!v.is_number_integer())
        fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t as_seed(const json& v, const std::string& path)
{
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
    fail(path, "expected a non-negative 64-bit integer");
}

Complex as_complex(const json& v, const std::string& path)
{
    if (v.is_number())
        return Complex(as_number(v, path), 0.0);
    if (!v.is_array() || v.size() != 2)
        fail(path, "expected an [re, im] pair");
    return Complex(as_number(v[0], index(path, 0)), as_number(v[1], index(path, 1)));
}

ComplexMatrix as_matrix(const json& v, const std::string& path, std::optional<Eigen::Index> dim)
{
    if (!v.is_array() || v.empty())
        fail(path, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    if (dim && rows != *dim)
        fail(path, "expected " + std::to_string(*dim) + " rows, got " + std::to_string(rows));
    ComplexMatrix m(rows, rows);
    for (std::size_t r = 0; r < v.size(); ++r) {
        const json& row = v[r];
        const std::string rp = index(path, r);
        if (!row.is_array())
            fail(rp, "expected an array of entries");
        if (static_cast<Eigen::Index>(row.size()) != rows)
            fail(rp, "matrix is not square: expected " + std::to_string(rows) + " entries, got " +
                         std::to_string(row.size()));
        for (std::size_t c = 0; c < row.size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_complex(row[c], index(rp, c));
    }
    return m;
}

std::vector<ComplexMatrix> as_matrix_list(const json& obj, const std::string& path, const char* key, Eigen::Index dim)
{
    std::vector<ComplexMatrix> out;
    const auto it = obj.find(key);
    if (it == obj.end())
        return out;
    const std::string p = child(path, key);
    if (!it->is_array())
        fail(p, "expected an array of matrices");
    for (std::size_t i = 0; i < it->size(); ++i)
        out.push_back(as_matrix((*it)[i], index(p, i), dim));
    return out;
}

ModelSpec parse_model(const json& v, const std::string& path)
{
    if (!v.is_object())
        fail(path, "expected an object");
    reject_unknown(v, path, {"dim", "hamiltonian", "diffusive", "jump"});
    std::optional<Eigen::Index> dim;
    if (v.contains("dim")) {
        const std::int64_t d = as_int(v["dim"], child(path, "dim"));
        if (d < 1 || d > kMaxDim)
            fail(child(path, "dim"), "expected an integer in [1, " + std::to_string(kMaxDim) + "]");
        dim = static_cast<Eigen::Index>(d);
    }
    const ComplexMatrix h = as_matrix(require(v, path, "hamiltonian"), child(path, "hamiltonian"), dim);
    auto diffusive = as_matrix_list(v, path, "diffusive", h.rows());
    auto jumps = as_matrix_list(v, path, "jump", h.rows());
    try {
        return ModelSpec(h, std::move(diffusive), std::move(jumps));
    } catch (const InvalidArgument& e) {
        fail(path, e.what());
    }
}

DensityMatrix parse_state(const json& v, const std::string& path, Eigen::Index dim)
{
    const ComplexMatrix m = as_matrix(v, path, dim);
    try {
        return DensityMatrix(m);
    } catch (const Error& e) {
        fail(path, e.what());
    }
}

SimConfig parse_simulation(const json& v, const std::string& path)
{
    if (!v.is_object())
        fail(path, "expected an object");
    reject_unknown(v, path, {"dt", "horizon", "seed", "max_jump_prob", "renorm_every"});
    SimConfig sim;
    sim.dt = as_number(require(v, path, "dt"), child(path, "dt"));
    sim.horizon = as_number(require(v, path, "horizon"), child(path, "horizon"));
    if (v.contains("seed"))
        sim.seed = as_seed(v["seed"], child(path, "seed"));
    if (v.contains("max_jump_prob"))
        sim.max_jump_prob = as_number(v["max_jump_prob"], child(path, "max_jump_prob"));
    if (v.contains("renorm_every")) {
        const std::int64_t r = as_int(v["renorm_every"], child(path, "renorm_every"));
        if (r < 1 || r > 1000000)
            fail(child(path, "renorm_every"), "expected a positive integer");
        sim.renorm_every = static_cast<int>(r);
    }
    try {
        sim.validate();
    } catch (const InvalidArgument& e) {
        fail(path, e.what());
    }
    return sim;
}

std::vector<double> parse_sample_times(const json& v, const std::string& path, const SimConfig& sim)
{
    std::vector<double> out;
    if (v.is_object()) {
        // {"step": s} expands to 0, s, 2s, ... up to the horizon.
        reject_unknown(v, path, {"step"});
        const double step = as_number(require(v, path, "step"), child(path, "step"));
        if (!(step > 0.0))
            fail(child(path, "step"), "expected a positive number");
        const auto n = static_cast<std::int64_t>(std::floor(sim.horizon / step + 1e-9));
        if (n > 1000000)
            fail(child(path, "step"), "too many sample times");
        for (std::int64_t i = 0; i <= n; ++i)
            out.push_back(static_cast<double>(i) * step);
        return out;
    }
    if (!v.is_array() || v.empty())
        fail(path, "expected a non-empty array or {\"step\": s}");
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(as_number(v[i], index(path, i)));
    return out;
}

Tolerances parse_tolerances(const json& v, const std::string& path)
{
    if (!v.is_object())
        fail(path, "expected an object");
    reject_unknown(v, path,
                   {"sigma_band", "dual_identity", "fidelity_monotone", "final_fidelity_min", "final_fidelity_max",
                    "offpair_product_max", "unresolved_max_fraction", "cesaro_median_max", "cesaro_monotone",
                    "gamma_agreement_min", "limit_distance_max", "failure_fraction_max", "master_eq_dt_factor"});
    Tolerances t;
    auto number = [&](const char* key, double& field) {
        if (v.contains(key))
            field = as_number(v[key], child(path, key));
    };
    auto optional_number = [&](const char* key, std::optional<double>& field) {
        if (v.contains(key))
            field = as_number(v[key], child(path, key));
    };
    auto flag = [&](const char* key, bool& field) {
        if (v.contains(key))
            field = as_bool(v[key], child(path, key));
    };
    number("sigma_band", t.sigma_band);
    number("dual_identity", t.dual_identity);
    flag("fidelity_monotone", t.fidelity_monotone);
    optional_number("final_fidelity_min", t.final_fidelity_min);
    optional_number("final_fidelity_max", t.final_fidelity_max);
    number("offpair_product_max", t.offpair_product_max);
    number("unresolved_max_fraction", t.unresolved_max_fraction);
    optional_number("cesaro_median_max", t.cesaro_median_max);
    flag("cesaro_monotone", t.cesaro_monotone);
    number("gamma_agreement_min", t.gamma_agreement_min);
    optional_number("limit_distance_max", t.limit_distance_max);
    number("failure_fraction_max", t.failure_fraction_max);
    number("master_eq_dt_factor", t.master_eq_dt_factor);
    return t;
}

json tolerances_to_json(const Tolerances& t)
{
    json j = {
        {"sigma_band", t.sigma_band},
        {"dual_identity", t.dual_identity},
        {"fidelity_monotone", t.fidelity_monotone},
        {"offpair_product_max", t.offpair_product_max},
        {"unresolved_max_fraction", t.unresolved_max_fraction},
        {"cesaro_monotone", t.cesaro_monotone},
        {"gamma_agreement_min", t.gamma_agreement_min},
        {"failure_fraction_max", t.failure_fraction_max},
        {"master_eq_dt_factor", t.master_eq_dt_factor},
    };
    if (t.final_fidelity_min)
        j["final_fidelity_min"] = *t.final_fidelity_min;
    if (t.final_fidelity_max)
        j["final_fidelity_max"] = *t.final_fidelity_max;
    if (t.cesaro_median_max)
        j["cesaro_median_max"] = *t.cesaro_median_max;
    if (t.limit_distance_max)
        j["limit_distance_max"] = *t.limit_distance_max;
    return j;
}

// Line and column of a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

ExperimentConfig parse_config(const json& doc)
{
    if (!doc.is_object())
        fail("<root>", "expected an object");
    reject_unknown(doc, "",
                   {"name", "model", "initial_state", "estimate_state", "simulation", "sample_times", "experiment"});
    std::string name = "unnamed";
    if (doc.contains("name")) {
        if (!doc["name"].is_string())
            fail("name", "expected a string");
        name = doc["name"].get<std::string>();
    }
    ModelSpec spec = parse_model(require(doc, "", "model"), "model");
    DensityMatrix rho0 = parse_state(require(doc, "", "initial_state"), "initial_state", spec.dim());
    DensityMatrix rho_hat0 = doc.contains("estimate_state")
                                 ? parse_state(doc["estimate_state"], "estimate_state", spec.dim())
                                 : DensityMatrix::maximally_mixed(spec.dim());
    SimConfig sim = parse_simulation(require(doc, "", "simulation"), "simulation");
    std::vector<double> samples =
        doc.contains("sample_times") ? parse_sample_times(doc["sample_times"], "sample_times", sim)
                                     : std::vector<double>{0.0, sim.horizon};

    ExperimentConfig cfg{
        .name = std::move(name),
        .spec = std::move(spec),
        .rho0 = std::move(rho0),
        .rho_hat0 = std::move(rho_hat0),
        .sim = sim,
        .sample_times = std::move(samples),
        .n_traj = 1,
        .kind = std::nullopt,
        .gamma_threshold = 0.95,
        .tolerances = Tolerances{},
    };
    if (doc.contains("experiment")) {
        const json& e = doc["experiment"];
        if (!e.is_object())
            fail("experiment", "expected an object");
        reject_unknown(e, "experiment", {"kind", "trajectories", "gamma_threshold", "tolerances"});
        if (e.contains("kind")) {
            if (!e["kind"].is_string())
                fail("experiment.kind", "expected a string");
            const auto kind = parse_experiment_kind(e["kind"].get<std::string>());
            if (!kind)
                fail("experiment.kind", "unknown experiment '" + e["kind"].get<std::string>() + "'");
            cfg.kind = kind;
        }
        if (e.contains("trajectories")) {
            cfg.n_traj = as_int(e["trajectories"], "experiment.trajectories");
            if (cfg.n_traj < 1)
                fail("experiment.trajectories", "expected a positive integer");
        }
        if (e.contains("gamma_threshold"))
            cfg.gamma_threshold = as_number(e["gamma_threshold"], "experiment.gamma_threshold");
        if (e.contains("tolerances"))
            cfg.tolerances = parse_tolerances(e["tolerances"], "experiment.tolerances");
    }
    try {
        cfg.validate();
    } catch (const DegenerateStateError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

ExperimentConfig parse_config_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        std::ostringstream msg;
        msg << "line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    return parse_config(doc);
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(path.string() + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

json matrix_to_json(const ComplexMatrix& m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

json serialize_config(const ExperimentConfig& cfg)
{
    json diffusive = json::array();
    for (const auto& l : cfg.spec.diffusive_ops())
        diffusive.push_back(matrix_to_json(l));
    json jumps = json::array();
    for (const auto& c : cfg.spec.jump_ops())
        jumps.push_back(matrix_to_json(c));
    json experiment = {
        {"trajectories", cfg.n_traj},
        {"gamma_threshold", cfg.gamma_threshold},
        {"tolerances", tolerances_to_json(cfg.tolerances)},
    };
    if (cfg.kind)
        experiment["kind"] = std::string(to_string(*cfg.kind));
    return json{
        {"name", cfg.name},
        {"model",
         {{"dim", cfg.spec.dim()},
          {"hamiltonian", matrix_to_json(cfg.spec.hamiltonian().matrix())},
          {"diffusive", diffusive},
          {"jump", jumps}}},
        {"initial_state", matrix_to_json(cfg.rho0.matrix())},
        {"estimate_state", matrix_to_json(cfg.rho_hat0.matrix())},
        {"simulation",
         {{"dt", cfg.sim.dt},
          {"horizon", cfg.sim.horizon},
          {"seed", cfg.sim.seed},
          {"max_jump_prob", cfg.sim.max_jump_prob},
          {"renorm_every", cfg.sim.renorm_every}}},
        {"sample_times", cfg.sample_times},
        {"experiment", experiment},
    };
}

std::string config_hash(const ExperimentConfig& cfg)
{
    const std::string canonical = serialize_config(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace qtraj
