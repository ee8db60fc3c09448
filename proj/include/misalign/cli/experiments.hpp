// Copyright 2026 The misalign-tomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include "misalign/cli/config.hpp"

namespace misalign::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericalFailure = 3, kVerifyFailure = 4 };

struct RunReport {
  int exit_code = kOk;
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path manifest;
  double wall_seconds = 0.0;
};

/// Runs the experiment and writes its CSV/JSON outputs plus
/// <name>.manifest.json into cfg.out_dir. Rows backed by failed restarts
/// are still written; the file is then marked "# status: partial" and the
/// exit code is kNumericalFailure.
RunReport run_experiment(const ExperimentConfig& cfg, std::ostream& log);

/// Re-checks stored outputs against the closed-form oracles and prints the
/// largest deviation per curve. Returns kOk or kVerifyFailure.
int verify_experiment(const ExperimentConfig& cfg, std::ostream& out);

/// Output files run_experiment writes for this config (without manifest).
std::vector<std::filesystem::path> expected_outputs(const ExperimentConfig& cfg);

}  // namespace misalign::cli
