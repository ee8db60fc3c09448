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

#include "misalign/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace misalign::cli {

namespace {

const std::set<std::string> kTopLevelKeys = {"experiment", "name",      "seed",      "restarts",    "threads",
                                             "out_dir",    "epsilon_deg", "alpha_deg", "probe_deg",  "max_parties",
                                             "witnesses",  "trials",    "witness",   "mode",        "optimizer"};

std::vector<double> read_grid(const Json& j, const char* key) {
  std::vector<double> out;
  if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(std::string(key) + ": grid entries must be numbers");
      out.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    const double start = j.at("start").get<double>();
    const double stop = j.at("stop").get<double>();
    const double step = j.at("step").get<double>();
    if (!(step > 0.0) || !(stop >= start)) throw ConfigError(std::string(key) + ": need step > 0 and stop >= start");
    const long count = std::lround(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 100000) throw ConfigError(std::string(key) + ": grid too large");
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else if (j.is_number()) {
    out.push_back(j.get<double>());
  } else {
    throw ConfigError(std::string(key) + ": expected an array, a number or {start, stop, step}");
  }
  if (out.empty()) throw ConfigError(std::string(key) + ": grid is empty");
  for (double v : out)
    if (!std::isfinite(v)) throw ConfigError(std::string(key) + ": non-finite grid value");
  return out;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

void validate_angles(const std::vector<double>& deg, double lo, double hi, const char* key) {
  for (double v : deg)
    require(v >= lo && v <= hi, std::string(key) + ": values must lie in [" + format_decimal(lo) + ", " +
                                    format_decimal(hi) + "] degrees");
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog = {
      {"fig3", "worst-case fidelity f(eps)^n of n-qubit product tomography over an epsilon grid"},
      {"fig4", "two-qubit susceptibility S(alpha) from the worst-case search at a small probe angle"},
      {"fig6", "witness corrections: closed forms against the optimizer for singlet and GHZ witnesses"},
      {"fig10", "fidelity-loss split into the marginal term and the rest at the worst case"},
      {"fig11", "local against correlated misalignment: worst-case loss over alpha"},
      {"bound-check", "random mixed qubit states and frames tested against the single-qubit floor"},
      {"custom", "correction curve for a user-supplied witness decomposition"},
  };
  return catalog;
}

OptimizerOptions ExperimentConfig::optimizer() const {
  OptimizerOptions o;
  o.restarts = restarts;
  o.seed = seed;
  o.threads = threads;
  o.retries = retries;
  o.qn = qn;
  o.mle.tol = mle_tol;
  return o;
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), "config must be a JSON object");
  for (const auto& item : j.items()) require(kTopLevelKeys.count(item.key()) > 0, "unknown config key \"" + item.key() + "\"");

  ExperimentConfig c;
  c.config_hash = git_blob_hash(text);
  try {
    require(j.contains("experiment") && j["experiment"].is_string(), "missing \"experiment\"");
    c.experiment = j["experiment"].get<std::string>();
    const auto& cat = experiment_catalog();
    require(std::any_of(cat.begin(), cat.end(), [&](const ExperimentInfo& e) { return e.id == c.experiment; }),
            "unknown experiment \"" + c.experiment + "\"");
    c.name = j.value("name", c.experiment);
    require(!c.name.empty() && c.name.find('/') == std::string::npos, "name must be a plain file stem");
    require(j.contains("seed") && j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0,
            "missing or invalid \"seed\" (non-negative integer)");
    c.seed = j["seed"].get<std::uint64_t>();
    c.restarts = j.value("restarts", 40);
    require(c.restarts >= 1, "restarts must be positive");
    c.threads = j.value("threads", 0);
    require(c.threads >= 0, "threads must be non-negative");
    if (j.contains("out_dir")) {
      std::filesystem::path p = j["out_dir"].get<std::string>();
      c.out_dir = p.is_absolute() ? p : base_dir / p;
    }
    if (j.contains("epsilon_deg")) c.epsilon_deg = read_grid(j["epsilon_deg"], "epsilon_deg");
    if (j.contains("alpha_deg")) c.alpha_deg = read_grid(j["alpha_deg"], "alpha_deg");
    c.probe_deg = j.value("probe_deg", c.probe_deg);
    c.max_parties = j.value("max_parties", c.max_parties);
    c.trials = j.value("trials", c.trials);
    if (j.contains("witnesses")) {
      require(j["witnesses"].is_array(), "witnesses must be an array of names");
      for (const auto& w : j["witnesses"]) c.witnesses.push_back(w.get<std::string>());
    }
    if (j.contains("mode")) {
      const std::string m = j["mode"].get<std::string>();
      require(m == "local" || m == "correlated", "mode must be \"local\" or \"correlated\"");
      c.mode = m == "local" ? PlanMode::Local : PlanMode::Correlated;
    }
    if (j.contains("witness")) {
      if (j["witness"].is_string()) {
        std::filesystem::path p = j["witness"].get<std::string>();
        if (!p.is_absolute()) p = base_dir / p;
        std::ifstream in(p);
        require(static_cast<bool>(in), "cannot open witness file " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        c.witness = Json::parse(ss.str());
      } else {
        c.witness = j["witness"];
      }
    }
    if (j.contains("optimizer")) {
      const Json& o = j["optimizer"];
      require(o.is_object(), "optimizer must be an object");
      for (const auto& item : o.items()) {
        const std::string& k = item.key();
        if (k == "max_iter") c.qn.max_iter = item.value().get<int>();
        else if (k == "gtol") c.qn.gtol = item.value().get<double>();
        else if (k == "ftol") c.qn.ftol = item.value().get<double>();
        else if (k == "fd_step") c.qn.fd_step = item.value().get<double>();
        else if (k == "mle_tol") c.mle_tol = item.value().get<double>();
        else if (k == "retries") c.retries = item.value().get<int>();
        else throw ConfigError("unknown optimizer key \"" + k + "\"");
      }
      require(c.qn.max_iter > 0 && c.qn.gtol >= 0 && c.qn.ftol >= 0 && c.qn.fd_step > 0 && c.mle_tol > 0 && c.retries >= 0,
              "optimizer settings out of range");
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
  }

  // Per-experiment requirements.
  const std::string& x = c.experiment;
  if (x == "fig3" || x == "fig6" || x == "bound-check" || x == "custom") {
    require(!c.epsilon_deg.empty(), x + " needs a non-empty epsilon_deg grid");
  }
  if (x == "fig4" || x == "fig10" || x == "fig11") {
    require(!c.alpha_deg.empty(), x + " needs a non-empty alpha_deg grid");
    validate_angles(c.alpha_deg, 0.0, 45.0, "alpha_deg");
  }
  if (x == "fig10" || x == "fig11") {
    require(c.epsilon_deg.size() == 1, x + " needs a single epsilon_deg value");
  }
  if (x == "fig3") {
    validate_angles(c.epsilon_deg, 0.0, 90.0, "epsilon_deg");
    require(c.max_parties >= 1 && c.max_parties <= 12, "max_parties must lie in 1..12");
  }
  if (x == "fig4") require(c.probe_deg > 0.0 && c.probe_deg <= 90.0, "probe_deg must lie in (0, 90]");
  if (x == "fig6") {
    require(!c.witnesses.empty(), "fig6 needs a non-empty witnesses list");
    for (const auto& w : c.witnesses) {
      bool ok = w == "singlet";
      if (!ok && w.rfind("ghz", 0) == 0 && w.size() > 3 && w.find_first_not_of("0123456789", 3) == std::string::npos) {
        const int n = std::stoi(w.substr(3));
        ok = n >= 3 && n <= 8;
      }
      require(ok, "unknown witness \"" + w + "\" (singlet or ghz3..ghz8)");
    }
    validate_angles(c.epsilon_deg, 0.0, 89.0, "epsilon_deg");
  }
  if (x == "fig10" || x == "fig11") validate_angles(c.epsilon_deg, 0.0, 90.0, "epsilon_deg");
  if (x == "bound-check") {
    require(c.trials >= 1, "trials must be positive");
    validate_angles(c.epsilon_deg, 0.0, 35.0, "epsilon_deg");
  }
  if (x == "custom") {
    require(c.witness.has_value(), "custom needs a \"witness\" object or file");
    try {
      (void)witness_from_json(*c.witness);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("invalid witness: ") + e.what());
    }
    validate_angles(c.epsilon_deg, 0.0, 89.0, "epsilon_deg");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.restarts) {
    if (*o.restarts < 1) throw ConfigError("--restarts must be positive");
    cfg.restarts = *o.restarts;
  }
  if (o.threads) {
    if (*o.threads < 0) throw ConfigError("--threads must be non-negative");
    cfg.threads = *o.threads;
  }
  if (const char* env = std::getenv("MISALIGN_TOMO_THREADS"); env && *env) {
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (*end != '\0' || t < 0 || t > 4096) throw ConfigError("MISALIGN_TOMO_THREADS must be a non-negative integer");
    cfg.threads = static_cast<int>(t);
  }
  if (o.out_dir) cfg.out_dir = *o.out_dir;
}

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("hash context allocation failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

}  // namespace misalign::cli
