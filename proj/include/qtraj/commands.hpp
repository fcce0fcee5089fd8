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

// Command implementations behind the qtraj executable. Each returns a
// process exit code: 0 success, 1 input error, 2 model or precondition
// rejection, 3 failed assertion.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>

namespace qtraj {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitInput = 1,
    kExitRejected = 2,
    kExitAssertion = 3,
};

struct AnalyzeOptions {
    /// Report destination; standard output when empty.
    std::optional<std::filesystem::path> out;
};

struct SimulateOptions {
    std::int64_t trajectories = 1;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
    /// One long-format file instead of one file per trajectory.
    bool combined = false;
};

struct ExperimentOptions {
    std::filesystem::path out_dir = ".";
    /// Zero selects the default worker count.
    unsigned workers = 0;
};

int cmd_analyze(const std::filesystem::path& config, const AnalyzeOptions& opts, std::ostream& out,
                std::ostream& err);
int cmd_simulate(const std::filesystem::path& config, const SimulateOptions& opts, std::ostream& out,
                 std::ostream& err);
int cmd_experiment(const std::filesystem::path& config, const ExperimentOptions& opts, std::ostream& out,
                   std::ostream& err);

/// Parses the command line and dispatches to one of the commands above.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace qtraj
