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

// CSV and JSON serializers for trajectories, experiment summaries and
// structure reports. Numbers are written with 17 significant digits,
// independent of the process locale.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"

#include "qtraj/experiments.hpp"
#include "qtraj/sde.hpp"
#include "qtraj/structure.hpp"

namespace qtraj {

std::string format_double(double x);

void write_path_header(std::ostream& os, std::size_t num_enclosures, std::size_t num_jump, bool with_index);

/// One row per sample. with_index prepends the trajectory index, for the
/// combined long format.
void write_path_rows(std::ostream& os, const PathRecord& path, std::optional<std::int64_t> trajectory);

void write_summary_csv(std::ostream& os, const MonteCarloSummary& summary);
void write_checks_csv(std::ostream& os, const MonteCarloSummary& summary);
void write_trajectories_csv(std::ostream& os, const MonteCarloSummary& summary);
void write_gamma_csv(std::ostream& os, const GammaLaw& law);

nlohmann::json report_to_json(const StructureReport& report);

} // namespace qtraj
