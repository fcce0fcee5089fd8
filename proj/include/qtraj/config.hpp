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

// JSON run configuration: model, initial states, integration settings,
// sample times and experiment parameters.
//
// Complex matrices are written row-major as arrays of rows, each entry an
// [re, im] pair (a bare number is accepted as a real entry).

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "qtraj/errors.hpp"
#include "qtraj/experiments.hpp"

namespace qtraj {

/// Malformed or inconsistent configuration; the message leads with the
/// offending field path or the line and column of a syntax error.
class ConfigError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config: parse_config(serialize_config(c)) reproduces c.
nlohmann::json serialize_config(const ExperimentConfig& cfg);

nlohmann::json matrix_to_json(const ComplexMatrix& m);

/// FNV-1a 64 of the canonical (sorted-key, compact) serialization, as hex.
std::string config_hash(const ExperimentConfig& cfg);

} // namespace qtraj
