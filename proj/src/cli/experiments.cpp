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

#include "misalign/cli/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "misalign/cli/csv.hpp"
#include "misalign/sampling.hpp"
#include "misalign/serialization.hpp"
#include "misalign/tomography.hpp"
#include "misalign/witness.hpp"
#include "misalign/worstcase.hpp"

namespace misalign::cli {

namespace {

namespace fs = std::filesystem;

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<double> to_radians(const std::vector<double>& deg) {
  std::vector<double> out;
  for (double d : deg) out.push_back(d * kDeg);
  return out;
}

CsvTable new_table(const ExperimentConfig& cfg, std::vector<std::string> columns) {
  CsvTable t;
  t.comments = {{"experiment", cfg.experiment},
                {"seed", std::to_string(cfg.seed)},
                {"restarts", std::to_string(cfg.restarts)},
                {"tolerances", "qn_gtol=" + format_decimal(cfg.qn.gtol) + " qn_ftol=" + format_decimal(cfg.qn.ftol) +
                                   " fd_step=" + format_decimal(cfg.qn.fd_step) + " mle_tol=" + format_decimal(cfg.mle_tol) +
                                   " max_iter=" + std::to_string(cfg.qn.max_iter) + " retries=" + std::to_string(cfg.retries)},
                {"config_hash", cfg.config_hash}};
  t.columns = std::move(columns);
  return t;
}

void mark_partial(CsvTable& t, int failures) {
  t.comments.emplace_back("status", "partial (" + std::to_string(failures) + " restarts failed after retry)");
}

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

WitnessSpec named_witness(const std::string& name) {
  if (name == "singlet") return singlet_witness();
  return ghz_witness(std::stoi(name.substr(3)));
}

/// Odd GHZ closed forms are only trusted up to pi/(2n).
bool closed_form_trusted(const WitnessSpec& spec, double eps) {
  const int fam = witness_family(spec);
  if (fam >= 5 && fam % 2 == 1) return ghz_epsilon_in_validated_range(fam, eps);
  return true;
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& suffix, const std::string& ext) {
  return cfg.out_dir / (cfg.name + suffix + ext);
}

struct Outcome {
  std::vector<fs::path> files;
  int failures = 0;
};

// ---------------------------------------------------------------------------

Outcome run_fig3(const ExperimentConfig& cfg) {
  std::vector<std::string> cols = {"epsilon_deg"};
  for (int n = 1; n <= cfg.max_parties; ++n) cols.push_back("f" + std::to_string(n));
  CsvTable t = new_table(cfg, cols);
  for (double d : cfg.epsilon_deg) {
    std::vector<std::optional<double>> row = {d};
    for (int n = 1; n <= cfg.max_parties; ++n) row.push_back(worst_case_fidelity_product(n, d * kDeg).value);
    t.add_row(row);
  }
  const fs::path p = output_path(cfg, "", ".csv");
  write_csv(p, t);
  return {{p}, 0};
}

Outcome run_fig4(const ExperimentConfig& cfg, std::ostream& log) {
  CsvTable t = new_table(cfg, {"alpha_deg", "concurrence", "worst_fidelity", "susceptibility", "failed_restarts"});
  const OptimizerOptions opts = cfg.optimizer();
  int failures = 0;
  for (double a : cfg.alpha_deg) {
    const auto rows = susceptibility_curve({a * kDeg}, cfg.probe_deg * kDeg, opts);
    const auto& r = rows.front();
    failures += r.failed_restarts;
    const bool ok = std::isfinite(r.worst_fidelity);
    t.add_row({a, r.concurrence, ok ? std::optional(r.worst_fidelity) : std::nullopt,
               ok ? std::optional(r.susceptibility) : std::nullopt, static_cast<double>(r.failed_restarts)});
    log << "fig4 alpha=" << format_decimal(a) << " S=" << format_decimal(r.susceptibility) << "\n";
  }
  if (failures) mark_partial(t, failures);
  const fs::path p = output_path(cfg, "", ".csv");
  write_csv(p, t);
  return {{p}, failures};
}

std::string cache_key(const ExperimentConfig& cfg, const std::string& witness) {
  Json j = {{"witness", witness},       {"epsilon_deg", cfg.epsilon_deg}, {"seed", cfg.seed},
            {"restarts", cfg.restarts}, {"max_iter", cfg.qn.max_iter},    {"gtol", cfg.qn.gtol},
            {"ftol", cfg.qn.ftol},      {"fd_step", cfg.qn.fd_step},      {"retries", cfg.retries}};
  return git_blob_hash(j.dump()).substr(0, 16);
}

CsvTable correction_table(const ExperimentConfig& cfg, const WitnessSpec& spec, PlanMode mode, int& failures) {
  CsvTable t = new_table(cfg, {"epsilon_deg", "w_closed_form", "w_optimized"});
  const auto rows = correction_curve(spec, to_radians(cfg.epsilon_deg), mode, cfg.optimizer());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    failures += rows[i].failed_restarts;
    const bool ok = std::isfinite(rows[i].optimized);
    t.add_row({cfg.epsilon_deg[i], rows[i].closed_form, ok ? std::optional(rows[i].optimized) : std::nullopt});
  }
  return t;
}

Outcome run_fig6(const ExperimentConfig& cfg, std::ostream& log) {
  Outcome out;
  for (const auto& w : cfg.witnesses) {
    const WitnessSpec spec = named_witness(w);
    const fs::path p = output_path(cfg, "_" + w, ".csv");
    const bool cacheable = w == "ghz3";
    const fs::path cache = cfg.out_dir / "cache" / (cfg.name + "_" + w + "_" + cache_key(cfg, w) + ".csv");
    int failures = 0;
    CsvTable t;
    if (cacheable && fs::exists(cache)) {
      t = read_csv(cache);
      log << "fig6 " << w << ": reusing " << cache.string() << "\n";
      // Refresh the hash line; the cached numbers do not depend on it.
      for (auto& [k, v] : t.comments)
        if (k == "config_hash") v = cfg.config_hash;
      if (t.comment("status")) failures = 1;
    } else {
      t = correction_table(cfg, spec, PlanMode::Local, failures);
      if (failures) mark_partial(t, failures);
      if (cacheable && !failures) write_csv(cache, t);
      log << "fig6 " << w << ": " << t.rows.size() << " points\n";
    }
    write_csv(p, t);
    out.files.push_back(p);
    out.failures += failures;
  }
  return out;
}

Outcome run_fig10(const ExperimentConfig& cfg, std::ostream& log) {
  CsvTable t = new_table(cfg, {"alpha_deg", "total", "marginal_term", "correlation_term", "marginal_share", "failed_restarts"});
  const double eps = cfg.epsilon_deg.front() * kDeg;
  const OptimizerOptions opts = cfg.optimizer();
  int failures = 0;
  for (double a : cfg.alpha_deg) {
    const FidelityProblem problem(eps, a * kDeg, PlanMode::Local, opts.mle);
    const OptimizationResult r = minimize_fidelity_problem(problem, opts);
    failures += r.failed_restarts;
    if (r.best_restart < 0) {
      t.add_row({a, std::nullopt, std::nullopt, std::nullopt, std::nullopt, static_cast<double>(r.failed_restarts)});
      continue;
    }
    const auto d = fidelity_loss_decomposition(problem.reconstruction(r.argmin).rho, problem.state(r.argmin).density());
    t.add_row({a, d.total, d.marginal_term, d.correlation_term, d.total != 0.0 ? std::optional(d.marginal_term / d.total) : std::nullopt,
               static_cast<double>(r.failed_restarts)});
    log << "fig10 alpha=" << format_decimal(a) << " loss=" << format_decimal(d.total) << "\n";
  }
  if (failures) mark_partial(t, failures);
  const fs::path p = output_path(cfg, "", ".csv");
  write_csv(p, t);
  return {{p}, failures};
}

Outcome run_fig11(const ExperimentConfig& cfg, std::ostream& log) {
  CsvTable t = new_table(cfg, {"alpha_deg", "local_loss", "correlated_loss", "failed_restarts"});
  const double eps = cfg.epsilon_deg.front() * kDeg;
  const OptimizerOptions opts = cfg.optimizer();
  int failures = 0;
  for (double a : cfg.alpha_deg) {
    const FidelityProblem local_problem(eps, a * kDeg, PlanMode::Local, opts.mle);
    const OptimizationResult local = minimize_fidelity_problem(local_problem, opts);
    OptimizerOptions corr_opts = opts;
    if (local.best_restart >= 0) corr_opts.seeds.push_back(lift_to_correlated(local_problem, local.argmin));
    const OptimizationResult corr =
        minimize_fidelity_problem(FidelityProblem(eps, a * kDeg, PlanMode::Correlated, opts.mle), corr_opts);
    const int f = local.failed_restarts + corr.failed_restarts;
    failures += f;
    auto loss = [](const OptimizationResult& r) {
      return r.best_restart >= 0 ? std::optional(1.0 - r.best_value) : std::nullopt;
    };
    t.add_row({a, loss(local), loss(corr), static_cast<double>(f)});
    log << "fig11 alpha=" << format_decimal(a) << " local=" << format_decimal(1.0 - local.best_value)
        << " correlated=" << format_decimal(1.0 - corr.best_value) << "\n";
  }
  if (failures) mark_partial(t, failures);
  const fs::path p = output_path(cfg, "", ".csv");
  write_csv(p, t);
  return {{p}, failures};
}

Outcome run_bound_check(const ExperimentConfig& cfg) {
  const BoundCheckReport r = single_qubit_bound_check(to_radians(cfg.epsilon_deg), cfg.trials, cfg.seed);
  const Json j = {{"trials", r.trials_per_epsilon},
                  {"violations", r.violations},
                  {"epsilon_deg", cfg.epsilon_deg},
                  {"min_margin", r.min_margin},
                  {"seed", cfg.seed},
                  {"config_hash", cfg.config_hash}};
  const fs::path p = output_path(cfg, "", ".json");
  write_json(p, j);
  return {{p}, 0};
}

Outcome run_custom(const ExperimentConfig& cfg, std::ostream& log) {
  const WitnessSpec spec = witness_from_json(*cfg.witness);
  int failures = 0;
  CsvTable t = correction_table(cfg, spec, cfg.mode, failures);
  if (failures) mark_partial(t, failures);
  const fs::path p = output_path(cfg, "", ".csv");
  write_csv(p, t);
  log << "custom: " << t.rows.size() << " points\n";
  return {{p}, failures};
}

// ---------------------------------------------------------------------------
// Verification.

struct Checker {
  std::ostream& out;
  bool ok = true;

  void report(const std::string& curve, double deviation, double tol, const std::string& what = "max |delta|") {
    const bool pass = deviation <= tol;
    ok = ok && pass;
    out << curve << ": " << what << " = " << format_decimal(deviation) << " (tol " << format_decimal(tol) << ") "
        << (pass ? "PASS" : "FAIL") << "\n";
  }
  void fail(const std::string& curve, const std::string& why) {
    ok = false;
    out << curve << ": FAIL (" << why << ")\n";
  }
};

double cell(const CsvTable& t, std::size_t row, const std::string& col) {
  const int c = t.column(col);
  if (c < 0) throw std::runtime_error("missing column " + col);
  const auto v = t.number(row, c);
  if (!v) throw std::runtime_error("empty cell in column " + col);
  return *v;
}

void check_hash(Checker& ck, const std::string& curve, const CsvTable& t, const ExperimentConfig& cfg) {
  const auto h = t.comment("config_hash");
  if (!h || *h != cfg.config_hash) ck.fail(curve, "output was produced by a different config");
}

void verify_fig3(const ExperimentConfig& cfg, Checker& ck) {
  const CsvTable t = read_csv(output_path(cfg, "", ".csv"));
  check_hash(ck, "fig3", t, cfg);
  if (t.rows.size() != cfg.epsilon_deg.size()) ck.fail("fig3", "row count differs from the grid");
  for (int n = 1; n <= cfg.max_parties; ++n) {
    double dev = 0.0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double eps = cell(t, i, "epsilon_deg") * kDeg;
      dev = std::max(dev, std::abs(cell(t, i, "f" + std::to_string(n)) - worst_case_fidelity_product(n, eps).value));
    }
    ck.report("fig3 f" + std::to_string(n), dev, 1e-12);
  }
}

void verify_correction(const std::string& curve, const CsvTable& t, const WitnessSpec& spec, const ExperimentConfig& cfg,
                       Checker& ck) {
  check_hash(ck, curve, t, cfg);
  if (t.rows.size() != cfg.epsilon_deg.size()) ck.fail(curve, "row count differs from the grid");
  double dev_opt = 0.0, dev_closed = 0.0, worst_sign = -std::numeric_limits<double>::infinity();
  bool any_closed = false;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double eps = cell(t, i, "epsilon_deg") * kDeg;
    const double opt = cell(t, i, "w_optimized");
    worst_sign = std::max(worst_sign, opt - (spec.identity_coeff() - (witness_family(spec) == 2 ? 0.25 : 0.5)));
    const auto closed = known_correction(spec, eps);
    if (!closed || !closed_form_trusted(spec, eps)) continue;
    any_closed = true;
    dev_opt = std::max(dev_opt, std::abs(opt - *closed));
    const auto stored = t.number(i, t.column("w_closed_form"));
    dev_closed = std::max(dev_closed, stored ? std::abs(*stored - *closed) : std::numeric_limits<double>::infinity());
  }
  if (any_closed) {
    ck.report(curve + " optimizer vs closed form", dev_opt, 1e-4);
    ck.report(curve + " stored closed form", dev_closed, 1e-12);
  } else if (witness_family(spec) != 0) {
    ck.report(curve + " (no closed form) largest optimized value", std::max(worst_sign, 0.0), 1e-6, "max(w, 0)");
  } else {
    ck.out << curve << ": no closed-form oracle for this witness\n";
  }
}

void verify_fig6(const ExperimentConfig& cfg, Checker& ck) {
  for (const auto& w : cfg.witnesses) {
    const CsvTable t = read_csv(output_path(cfg, "_" + w, ".csv"));
    verify_correction("fig6 " + w, t, named_witness(w), cfg, ck);
  }
}

void verify_fig4(const ExperimentConfig& cfg, Checker& ck) {
  const CsvTable t = read_csv(output_path(cfg, "", ".csv"));
  check_hash(ck, "fig4", t, cfg);
  double dev_c = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double a = cell(t, i, "alpha_deg") * kDeg;
    dev_c = std::max(dev_c, std::abs(cell(t, i, "concurrence") - std::sin(2 * a)));
    if (a == 0.0)
      ck.report("fig4 S(0) vs -sqrt2", std::abs(cell(t, i, "susceptibility") / -std::numbers::sqrt2 - 1.0), 0.02,
                "relative deviation");
  }
  ck.report("fig4 concurrence", dev_c, 1e-12);
}

void verify_fig10(const ExperimentConfig& cfg, Checker& ck) {
  const CsvTable t = read_csv(output_path(cfg, "", ".csv"));
  check_hash(ck, "fig10", t, cfg);
  double dev = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    dev = std::max(dev, std::abs(cell(t, i, "total") - cell(t, i, "marginal_term") - cell(t, i, "correlation_term")));
  ck.report("fig10 total = marginal + correlation", dev, 1e-12);
}

void verify_fig11(const ExperimentConfig& cfg, Checker& ck) {
  const CsvTable t = read_csv(output_path(cfg, "", ".csv"));
  check_hash(ck, "fig11", t, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    worst = std::max(worst, cell(t, i, "local_loss") - cell(t, i, "correlated_loss"));
  ck.report("fig11 local loss above correlated loss", worst, 1e-6, "max excess");
}

void verify_bound_check(const ExperimentConfig& cfg, Checker& ck) {
  const fs::path p = output_path(cfg, "", ".json");
  std::ifstream in(p);
  if (!in) throw std::runtime_error("missing output " + p.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw std::runtime_error("malformed report " + p.string());
  }
  if (j.value("config_hash", std::string()) != cfg.config_hash) ck.fail("bound-check", "output was produced by a different config");
  if (j.value("trials", -1) != cfg.trials) ck.fail("bound-check", "trial count differs from the config");
  ck.report("bound-check violations", j.value("violations", 1e300), 0.0, "count");
}

}  // namespace

std::vector<fs::path> expected_outputs(const ExperimentConfig& cfg) {
  if (cfg.experiment == "fig6") {
    std::vector<fs::path> out;
    for (const auto& w : cfg.witnesses) out.push_back(output_path(cfg, "_" + w, ".csv"));
    return out;
  }
  if (cfg.experiment == "bound-check") return {output_path(cfg, "", ".json")};
  return {output_path(cfg, "", ".csv")};
}

RunReport run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.out_dir);
  Outcome o;
  const std::string& x = cfg.experiment;
  if (x == "fig3") o = run_fig3(cfg);
  else if (x == "fig4") o = run_fig4(cfg, log);
  else if (x == "fig6") o = run_fig6(cfg, log);
  else if (x == "fig10") o = run_fig10(cfg, log);
  else if (x == "fig11") o = run_fig11(cfg, log);
  else if (x == "bound-check") o = run_bound_check(cfg);
  else if (x == "custom") o = run_custom(cfg, log);
  else throw ConfigError("unknown experiment " + x);

  RunReport rep;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.outputs = o.files;
  rep.exit_code = o.failures ? kNumericalFailure : kOk;
  Json files = Json::array();
  for (const auto& f : o.files) files.push_back(f.filename().string());
  const Json manifest = {{"experiment", cfg.experiment},
                         {"name", cfg.name},
                         {"config_hash", cfg.config_hash},
                         {"seed", cfg.seed},
                         {"restarts", cfg.restarts},
                         {"threads", cfg.threads},
                         {"wall_time_s", rep.wall_seconds},
                         {"status", o.failures ? "partial" : "complete"},
                         {"failed_restarts", o.failures},
                         {"outputs", files}};
  rep.manifest = cfg.out_dir / (cfg.name + ".manifest.json");
  write_json(rep.manifest, manifest);
  return rep;
}

int verify_experiment(const ExperimentConfig& cfg, std::ostream& out) {
  Checker ck{out};
  try {
    const std::string& x = cfg.experiment;
    if (x == "fig3") verify_fig3(cfg, ck);
    else if (x == "fig4") verify_fig4(cfg, ck);
    else if (x == "fig6") verify_fig6(cfg, ck);
    else if (x == "fig10") verify_fig10(cfg, ck);
    else if (x == "fig11") verify_fig11(cfg, ck);
    else if (x == "bound-check") verify_bound_check(cfg, ck);
    else if (x == "custom") {
      const CsvTable t = read_csv(output_path(cfg, "", ".csv"));
      verify_correction("custom", t, witness_from_json(*cfg.witness), cfg, ck);
    }
  } catch (const std::exception& e) {
    ck.fail(cfg.experiment, e.what());
  }
  out << (ck.ok ? "verify: PASS" : "verify: FAIL") << "\n";
  return ck.ok ? kOk : kVerifyFailure;
}

}  // namespace misalign::cli
