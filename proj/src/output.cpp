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

#include "qtraj/output.hpp"

#include <charconv>
#include <cmath>

#include "qtraj/config.hpp"

namespace qtraj {

std::string format_double(double x)
{
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += (c == '\n' || c == '\r') ? ' ' : c;
    }
    out += '"';
    return out;
}

class Row {
public:
    explicit Row(std::ostream& os) : os_(os) {}
    ~Row() { os_ << '\n'; }

    Row& operator<<(const std::string& s)
    {
        sep();
        os_ << s;
        return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double x) { return *this << format_double(x); }
    Row& operator<<(std::int64_t x) { return *this << std::to_string(x); }
    Row& operator<<(int x) { return *this << std::to_string(x); }
    Row& operator<<(std::size_t x) { return *this << std::to_string(x); }

private:
    void sep()
    {
        if (!first_)
            os_ << ',';
        first_ = false;
    }

    std::ostream& os_;
    bool first_ = true;
};

std::string entry_name(Eigen::Index r, Eigen::Index c)
{
    return "rho_" + std::to_string(r + 1) + std::to_string(c + 1);
}

bool is_pair_kind(ExperimentKind kind)
{
    return kind != ExperimentKind::Reference;
}

nlohmann::json complex_list(const std::vector<Complex>& xs)
{
    nlohmann::json out = nlohmann::json::array();
    for (Complex x : xs)
        out.push_back({x.real(), x.imag()});
    return out;
}

template <class M>
nlohmann::json matrix_list(const std::vector<M>& xs)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& x : xs) {
        if constexpr (std::is_same_v<M, ComplexMatrix>)
            out.push_back(matrix_to_json(x));
        else
            out.push_back(matrix_to_json(x.matrix()));
    }
    return out;
}

} // namespace

void write_path_header(std::ostream& os, std::size_t num_enclosures, std::size_t num_jump, bool with_index)
{
    Row row(os);
    if (with_index)
        row << "trajectory";
    row << "time" << "fidelity" << "fidelity_via_M";
    for (std::size_t i = 1; i <= num_enclosures; ++i)
        row << "Q" + std::to_string(i) + "_rho";
    for (std::size_t i = 1; i <= num_enclosures; ++i)
        row << "Q" + std::to_string(i) + "_rhohat";
    row << "cesaro_distance";
    for (std::size_t j = 1; j <= num_jump; ++j)
        row << "jumps_channel_" + std::to_string(j);
}

void write_path_rows(std::ostream& os, const PathRecord& path, std::optional<std::int64_t> trajectory)
{
    for (const PathSample& s : path.samples) {
        Row row(os);
        if (trajectory)
            row << *trajectory;
        row << s.time << s.fidelity << s.fidelity_via_M;
        for (double q : s.q_rho)
            row << q;
        for (double q : s.q_rho_hat)
            row << q;
        row << trace_distance(s.cesaro_rho, s.cesaro_rho_hat);
        for (std::int64_t n : s.jump_counts)
            row << n;
    }
}

void write_summary_csv(std::ostream& os, const MonteCarloSummary& summary)
{
    const Eigen::Index k = summary.dim;
    const std::size_t K = summary.num_enclosures;
    const bool exact = summary.kind == ExperimentKind::MasterEq;
    {
        Row h(os);
        h << "time";
        if (!is_pair_kind(summary.kind)) {
            h << "Z_rho_mean" << "Z_rho_se" << "Z_rhohat_mean" << "Z_rhohat_se";
        } else {
            h << "fidelity_mean" << "fidelity_se" << "fidelity_via_M_mean" << "fidelity_via_M_se"
              << "max_dual_discrepancy";
            for (const char* which : {"rho", "rhohat"})
                for (std::size_t i = 1; i <= K; ++i)
                    h << "Q" + std::to_string(i) + "_" + which + "_mean" << "Q" + std::to_string(i) + "_" + which + "_se";
            for (Eigen::Index c = 0; c < k; ++c) {
                for (Eigen::Index r = 0; r < k; ++r) {
                    const std::string e = entry_name(r, c);
                    h << e + "_re_mean" << e + "_re_se" << e + "_im_mean" << e + "_im_se";
                    if (exact)
                        h << e + "_re_exact" << e + "_im_exact";
                }
            }
            h << "cesaro_distance_median" << "cesaro_distance_p90";
            if (K > 0)
                h << "true_limit_distance_median" << "true_limit_distance_p90" << "estimated_limit_distance_median"
                  << "estimated_limit_distance_p90";
        }
    }
    for (const SampleRow& s : summary.rows) {
        Row row(os);
        row << s.time;
        if (!is_pair_kind(summary.kind)) {
            for (const Stat& z : s.z)
                row << z.mean << z.se;
            continue;
        }
        row << s.fidelity.mean << s.fidelity.se << s.fidelity_via_M.mean << s.fidelity_via_M.se
            << s.max_dual_discrepancy;
        for (const Stat& q : s.q_rho)
            row << q.mean << q.se;
        for (const Stat& q : s.q_rho_hat)
            row << q.mean << q.se;
        for (std::size_t e = 0; e < s.rho_re.size(); ++e) {
            row << s.rho_re[e].mean << s.rho_re[e].se << s.rho_im[e].mean << s.rho_im[e].se;
            if (exact)
                row << s.exact_re[e] << s.exact_im[e];
        }
        row << s.cesaro_distance.median << s.cesaro_distance.p90;
        if (K > 0)
            row << s.true_limit_distance.median << s.true_limit_distance.p90 << s.estimated_limit_distance.median
                << s.estimated_limit_distance.p90;
    }
}

void write_checks_csv(std::ostream& os, const MonteCarloSummary& summary)
{
    {
        Row h(os);
        h << "check" << "value" << "threshold" << "passed" << "enforced";
    }
    for (const Check& c : summary.checks) {
        Row row(os);
        row << c.name << c.value << c.threshold << (c.passed ? "true" : "false") << (c.enforced ? "true" : "false");
    }
}

void write_trajectories_csv(std::ostream& os, const MonteCarloSummary& summary)
{
    const std::size_t K = summary.num_enclosures;
    {
        Row h(os);
        h << "trajectory" << "failed" << "gamma_rho" << "gamma_rhohat" << "final_fidelity";
        for (const char* which : {"rho", "rhohat"})
            for (std::size_t i = 1; i <= K; ++i)
                h << "Q" + std::to_string(i) + "_" + which + "_final";
        for (std::size_t j = 1; j <= summary.num_jump; ++j)
            h << "jumps_channel_" + std::to_string(j);
        h << "failure";
    }
    for (const TrajectoryRecord& t : summary.trajectories) {
        Row row(os);
        row << t.index << (t.failed ? "true" : "false");
        if (t.failed) {
            row << "" << "" << "";
            for (std::size_t i = 0; i < 2 * K + summary.num_jump; ++i)
                row << "";
            row << csv_quote(t.failure);
            continue;
        }
        // Enclosures are reported 1-based; 0 marks an unresolved trajectory.
        row << t.gamma_rho + 1 << t.gamma_rho_hat + 1 << t.final_fidelity;
        for (double q : t.q_rho)
            row << q;
        for (double q : t.q_rho_hat)
            row << q;
        for (std::int64_t n : t.jump_counts)
            row << n;
        row << "";
    }
}

void write_gamma_csv(std::ostream& os, const GammaLaw& law)
{
    {
        Row h(os);
        h << "enclosure" << "expected" << "empirical" << "band";
    }
    for (std::size_t i = 0; i < law.expected.size(); ++i) {
        Row row(os);
        row << i + 1 << law.expected[i] << law.empirical[i] << law.band[i];
    }
}

nlohmann::json report_to_json(const StructureReport& report)
{
    nlohmann::json j;
    j["dim"] = report.decaying_projector.rows();
    j["fixed_point_dimension"] = report.fixed_point_basis.size();
    j["fixed_point_basis"] = matrix_list(report.fixed_point_basis);
    j["liouvillian_spectrum"] = complex_list(report.liouvillian_spectrum);
    j["decaying_dimension"] = report.decaying_dim;
    j["decaying_projector"] = matrix_to_json(report.decaying_projector);
    j["num_enclosures"] = report.invariant_states.size();
    j["invariant_states"] = matrix_list(report.invariant_states);
    j["enclosures"] = matrix_list(report.enclosures);
    j["dual_projectors"] = matrix_list(report.dual_projectors);
    j["unique_decomposition"] = report.unique_decomposition;

    nlohmann::json assumptions;
    assumptions["spectral"] = {{"holds", report.spectral_ok}};
    nlohmann::json ident = {{"holds", report.identifiable}, {"statistics", report.identifiability.table}};
    if (report.identifiability.witness)
        ident["unseparated_pair"] = {report.identifiability.witness->first + 1, report.identifiability.witness->second + 1};
    if (report.rejection)
        ident["holds"] = nullptr;
    assumptions["identifiability"] = ident;
    const Purification& p = report.purification;
    nlohmann::json pur = {{"verdict", std::string(to_string(p.verdict))}, {"method", p.method}};
    if (p.witness)
        pur["witness"] = matrix_to_json(*p.witness);
    if (p.mc_second_eigenvalue)
        pur["mc_second_eigenvalue"] = *p.mc_second_eigenvalue;
    assumptions["purification"] = pur;
    j["assumptions"] = assumptions;

    j["rejection"] = report.rejection ? nlohmann::json(*report.rejection) : nlohmann::json(nullptr);
    j["warnings"] = report.warnings;
    return j;
}

} // namespace qtraj
