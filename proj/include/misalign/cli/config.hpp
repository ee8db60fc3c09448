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

// Declarative experiment configs. See README.md for the schema.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "misalign/serialization.hpp"
#include "misalign/worstcase.hpp"

namespace misalign::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentInfo {
  std::string id;
  std::string description;
};

const std::vector<ExperimentInfo>& experiment_catalog();

struct ExperimentConfig {
  std::string experiment;
  /// Base name of every output file; defaults to the experiment id.
  std::string name;
  std::uint64_t seed = 0;
  int restarts = 40;
  int threads = 0;
  std::filesystem::path out_dir = "results";

  // Grids in degrees, as written in the file.
  std::vector<double> epsilon_deg;
  std::vector<double> alpha_deg;
  double probe_deg = 0.9;  // fig4 probe, pi/200

  int max_parties = 4;                 // fig3
  std::vector<std::string> witnesses;  // fig6: "singlet", "ghz3", "ghz4", ...
  int trials = 10000;                  // bound-check, per epsilon
  std::optional<Json> witness;         // custom
  PlanMode mode = PlanMode::Local;     // custom

  QuasiNewtonOptions qn = OptimizerOptions::default_qn();
  double mle_tol = OptimizerOptions::default_mle().tol;
  int retries = 1;

  /// Git blob hash of the config file contents.
  std::string config_hash;

  OptimizerOptions optimizer() const;
};

/// Parses a config document. `base_dir` resolves relative paths inside it.
/// Throws ConfigError on any schema violation.
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<int> threads;
  std::optional<std::filesystem::path> out_dir;
};

/// Applies command-line overrides; MISALIGN_TOMO_THREADS (when set and
/// non-empty) takes precedence over --threads.
void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

/// SHA-1 of "blob <size>\0<content>", as printed by `git hash-object`.
std::string git_blob_hash(std::string_view content);

}  // namespace misalign::cli
