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

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "misalign/cli/config.hpp"
#include "misalign/cli/experiments.hpp"
#include "misalign/serialization.hpp"

using namespace misalign::cli;

int main(int argc, char** argv) {
  CLI::App app{"Misalignment-robust tomography and witness experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  int restarts = 0, threads = 0;
  std::string out_dir;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out-dir", out_dir, "directory for outputs (overrides the config)");
  };
  CLI::App* run = app.add_subcommand("run", "run an experiment and write its outputs");
  add_common(run);
  auto* seed_opt = run->add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* restarts_opt = run->add_option("--restarts", restarts, "optimizer restarts per point");
  auto* threads_opt = run->add_option("--threads", threads, "restart pool size; MISALIGN_TOMO_THREADS wins");
  CLI::App* verify = app.add_subcommand("verify", "check stored outputs against closed-form oracles");
  add_common(verify);
  CLI::App* list = app.add_subcommand("list-experiments", "print the known experiment ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (list->parsed()) {
    for (const auto& e : experiment_catalog()) std::cout << e.id << "\t" << e.description << "\n";
    return kOk;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    Overrides o;
    if (run->parsed()) {
      if (*seed_opt) o.seed = seed;
      if (*restarts_opt) o.restarts = restarts;
      if (*threads_opt) o.threads = threads;
    }
    if (!out_dir.empty()) o.out_dir = out_dir;
    apply_overrides(cfg, o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  if (verify->parsed()) return verify_experiment(cfg, std::cout);

  try {
    const RunReport rep = run_experiment(cfg, std::cerr);
    for (const auto& f : rep.outputs) std::cout << f.string() << "\n";
    std::cout << rep.manifest.string() << "\n";
    if (rep.exit_code == kNumericalFailure) std::cerr << "numerical failure: outputs are marked partial\n";
    return rep.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  }
}
