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

// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// wall-clock limit. Criteria listed with --known-red are still reported as
// FAIL but do not change the exit status; if one of them passes, the exit
// status is non-zero so the list gets updated.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "misalign/cli/config.hpp"
#include "misalign/cli/experiments.hpp"
#include "misalign/rng.hpp"
#include "misalign/sampling.hpp"
#include "misalign/serialization.hpp"
#include "misalign/worstcase.hpp"
#include "oracles.hpp"
#include "witness_reference.hpp"

using namespace misalign;
namespace fs = std::filesystem;
using oracle::deg;
using oracle::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
  template <typename T>
  Verdict& note(const std::string& key, const T& value) {
    detail << key << "=" << value << " ";
    return *this;
  }
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<void(Verdict&)> body;
};

OptimizerOptions restarts(int r, std::uint64_t seed = 1) {
  OptimizerOptions o;
  o.restarts = r;
  o.seed = seed;
  return o;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

DensityMatrix product_of_marginals(const DensityMatrix& rho, int n) {
  const int first[] = {0};
  DensityMatrix out = partial_trace(rho, first);
  for (int j = 1; j < n; ++j) {
    const int keep[] = {j};
    out = tensor(out, partial_trace(rho, keep));
  }
  return out;
}

PureState product_plus(int n) {
  PureState s(psi_s(+1));
  for (int j = 1; j < n; ++j) s = tensor(s, PureState(psi_s(+1)));
  return s;
}

// 1 -------------------------------------------------------------------------
void closed_form_worst_case(Verdict& v) {
  const double eps = deg(2);
  const DensityMatrix tau = PureState(psi_s(+1)).density();
  const ReconstructionResult r =
      linear_inversion(simulate_statistics(tau, triad_plan(1, tomography_open_triad(eps))), standard_pauli_plan(1));
  const double f = fidelity(tau, r.rho);
  const double reference = oracle::single_worst_case(eps);
  const double closed = worst_case_fidelity_single(eps).value;
  v.note("pipeline", fmt(f)).note("|pipeline-oracle|", fmt(std::abs(f - reference)));
  v.note("|closed-oracle|", fmt(std::abs(closed - reference)));
  v.require(std::abs(f - 0.97502) <= 5e-6, "pipeline rounds to 0.97502");
  v.require(std::abs(f - reference) <= 1e-9, "pipeline within 1e-9 of the reference");
  v.require(std::abs(closed - reference) <= 1e-14, "closed form within 1e-14");
}

// 2 -------------------------------------------------------------------------
void product_curves(Verdict& v) {
  double worst = 0.0, worst_oracle = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const DensityMatrix tau = product_plus(n).density();
    for (int k = 0; k <= 10; ++k) {
      const double eps = deg(k);
      const ReconstructionResult r = reconstruct(simulate_statistics(tau, triad_plan(n, tomography_open_triad(eps))),
                                                 standard_pauli_plan(n));
      const double f = fidelity(tau, r.rho);
      worst = std::max(worst, std::abs(f - worst_case_fidelity_product(n, eps).value));
      worst_oracle = std::max(worst_oracle, std::abs(f - std::pow(oracle::single_worst_case(eps), n)));
    }
  }
  v.note("max|pipeline-closed|", fmt(worst)).note("max|pipeline-oracle|", fmt(worst_oracle));
  v.require(worst <= 1e-8 && worst_oracle <= 1e-8, "f_n = f^n within 1e-8");
}

// 3 -------------------------------------------------------------------------
void single_qubit_floor(Verdict& v) {
  const BoundCheckReport r = single_qubit_bound_check({deg(5), deg(15), deg(30)}, 10000, 1);
  v.note("trials/eps", r.trials_per_epsilon).note("violations", r.violations).note("min_margin", fmt(r.min_margin));
  v.require(r.trials_per_epsilon == 10000 && r.violations == 0, "no violation below f(eps) - 1e-6");
}

// 4 -------------------------------------------------------------------------
void mle_properties(Verdict& v) {
  CounterRng rng(404, 0);
  int converged = 0, runs = 0;
  double worst_residual = 0.0, worst_drop = 0.0;
  MleOptions traced;
  traced.record_likelihood = true;
  for (int i = 0; i < 200; ++i) {
    const int n = 1 + i % 2;
    const DensityMatrix tau = i % 4 < 2 ? random_pure_state(n, rng).density()
                                        : (n == 1 ? random_qubit_state(rng) : tensor(random_qubit_state(rng), random_qubit_state(rng)));
    const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(n), deg(rng.uniform(0.0, 30.0)), rng);
    const ReconstructionResult r = mle_reconstruct(simulate_statistics(tau, plan), standard_pauli_plan(n), traced);
    ++runs;
    if (r.converged) {
      ++converged;
      worst_residual = std::max(worst_residual, r.residual);
    }
    const auto& tr = r.likelihood_trace;
    for (std::size_t k = 1; k < tr.size(); ++k) {
      const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(tr[k - 1]) + 1.0);
      worst_drop = std::max(worst_drop, (tr[k - 1] - tr[k]) - slack);
    }
  }
  double worst_product = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 2;
    DensityMatrix tau = random_qubit_state(rng);
    for (int j = 1; j < n; ++j) tau = tensor(tau, random_qubit_state(rng));
    const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(n), deg(rng.uniform(0.0, 30.0)), rng);
    const ReconstructionResult r = mle_reconstruct(simulate_statistics(tau, plan), standard_pauli_plan(n));
    worst_product = std::max(worst_product, trace_distance(r.rho.matrix(), product_of_marginals(r.rho, n).matrix()));
  }
  v.note("converged", std::to_string(converged) + "/" + std::to_string(runs)).note("max_residual", fmt(worst_residual));
  v.note("max_likelihood_drop", fmt(std::max(worst_drop, 0.0))).note("max_product_distance", fmt(worst_product));
  v.require(converged == runs, "every run converges");
  v.require(worst_residual <= 1e-9, "fixed-point residual <= 1e-9");
  v.require(worst_drop <= 0.0, "likelihood monotone");
  v.require(worst_product <= 1e-6, "products preserved within 1e-6");
}

// 5 -------------------------------------------------------------------------
void boundary_geometry(Verdict& v) {
  CounterRng rng(505, 0);
  const MeasurementPlan pauli = standard_pauli_plan(1);
  int cases = 0, draws = 0;
  double worst_norm = 0.0, worst_cap = -1.0, worst_scaled_cap = -1.0;
  while (cases < 1000) {
    ++draws;
    const double eps = deg(rng.uniform(1.0, 30.0));
    const double lambda = lambda_ball_radius(eps);
    const BlochVector t = rng.uniform(0.85, 1.0) * random_unit_vector(rng);
    const OutcomeStatistics st = simulate_statistics(state_from_bloch(t), random_misaligned_plan(pauli, eps, rng));
    if (st.correlators().norm() <= 1.0) continue;
    ++cases;
    const BlochVector r = bloch_from_state(mle_reconstruct(st, pauli).rho);
    const double tn = t.norm();
    worst_norm = std::max(worst_norm, std::abs(r.norm() - 1.0));
    worst_cap = std::max(worst_cap, (1.0 - tn * lambda) - r.dot(t / tn));
    worst_scaled_cap = std::max(worst_scaled_cap, (1.0 - tn * lambda) / tn - r.dot(t / tn));
  }
  v.note("cases", cases).note("draws", draws).note("max|r|-1|", fmt(worst_norm));
  v.note("max cap deficit", fmt(worst_cap)).note("max deficit vs (1-t*lambda)/t", fmt(worst_scaled_cap));
  v.require(worst_norm <= 1e-6, "reconstructed Bloch norm 1 within 1e-6");
  v.require(worst_cap <= 1e-6, "r.t_hat >= 1 - t*lambda - 1e-6");
}

// 6 -------------------------------------------------------------------------
void susceptibility_endpoints(Verdict& v) {
  const std::vector<double> alphas{0.0, pi / 16, pi / 8, 3 * pi / 16, pi / 4};
  const auto rows = susceptibility_curve(alphas, pi / 200, restarts(40));
  const double s0 = rows[0].susceptibility;
  v.note("S(0)", fmt(s0)).note("rel.err", fmt(std::abs(s0 + std::sqrt(2.0)) / std::sqrt(2.0)));
  v.require(std::abs(s0 + std::sqrt(2.0)) <= 0.02 * std::sqrt(2.0), "S(0) = -sqrt2 within 2%");
  int failed = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    v.note("S(" + fmt(rows[i].alpha) + ")", fmt(rows[i].susceptibility));
    v.require(std::abs(rows[i].susceptibility) < std::abs(s0), "|S(alpha)| < |S(0)|");
  }
  for (const auto& r : rows) failed += r.failed_restarts;
  v.note("failed_restarts", failed);
}

// 7 -------------------------------------------------------------------------
void witness_corrections(Verdict& v) {
  const OptimizerOptions opts = restarts(40);
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(deg(k));

  const WitnessSpec singlet = singlet_witness();
  const auto psi = oracle::amplitudes(singlet_fixture_state().amplitudes());
  double fixture_dev = 0.0;
  for (double e : grid) {
    const double direct = oracle::braket(psi, oracle::reference_observable(singlet, triad_plan(2, witness_closed_triad(e))));
    fixture_dev = std::max(fixture_dev, std::abs(direct - singlet_correction_closed_form(e)));
  }
  double opt_dev = 0.0;
  for (const auto& r : correction_curve(singlet, grid, PlanMode::Local, opts)) opt_dev = std::max(opt_dev, std::abs(r.optimized - *r.closed_form));
  v.note("singlet fixture", fmt(fixture_dev)).note("singlet optimizer", fmt(opt_dev));
  v.require(fixture_dev <= 1e-12, "singlet fixture within 1e-12");
  v.require(opt_dev <= 1e-4, "singlet optimizer within 1e-4");

  for (int n : {4, 5, 6}) {
    const Parity parity = n % 2 ? Parity::Odd : Parity::Even;
    const WitnessSpec w = ghz_witness(n);
    const auto fx = oracle::amplitudes(biseparable_fixture(n, parity).amplitudes());
    double fdev = 0.0, odev = 0.0;
    for (double e : grid) {
      const double direct = oracle::braket(fx, oracle::reference_observable(w, ghz_plan(n, e, parity)));
      fdev = std::max(fdev, std::abs(direct - ghz_correction_closed_form(n, e).value));
    }
    for (const auto& r : correction_curve(w, grid, PlanMode::Local, opts)) odev = std::max(odev, std::abs(r.optimized - *r.closed_form));
    v.note("ghz" + std::to_string(n) + " fixture", fmt(fdev)).note("ghz" + std::to_string(n) + " optimizer", fmt(odev));
    v.require(fdev <= 1e-10, "GHZ fixture within 1e-10");
    v.require(odev <= 1e-4, "GHZ optimizer within 1e-4");
  }

  std::vector<double> grid0{0.0};
  grid0.insert(grid0.end(), grid.begin(), grid.end());
  const auto three = correction_curve(ghz_witness(3), grid0, PlanMode::Local, opts);
  double largest = -1.0, rise = 0.0, largest_positive_eps = -1.0;
  for (std::size_t i = 0; i < three.size(); ++i) {
    largest = std::max(largest, three[i].optimized);
    if (i > 0) {
      largest_positive_eps = std::max(largest_positive_eps, three[i].optimized);
      rise = std::max(rise, three[i].optimized - three[i - 1].optimized);
    }
  }
  v.note("ghz3 max", fmt(largest)).note("ghz3 max(eps>=1deg)", fmt(largest_positive_eps)).note("ghz3 max rise", fmt(rise));
  v.note("ghz3(10deg)", fmt(three.back().optimized));
  v.require(largest <= 1e-12, "n=3 values <= 0");
  v.require(largest_positive_eps < 0.0, "n=3 strictly negative for eps >= 1deg");
  v.require(rise <= 1e-4, "n=3 non-increasing within 1e-4");
}

// 8 -------------------------------------------------------------------------
void witness_shift(Verdict& v) {
  const double eps = deg(2);
  const WitnessSpec s = shift_witness(singlet_witness(), singlet_correction_closed_form(eps));
  const WitnessSpec g = shift_witness(ghz_witness(4), ghz_correction_closed_form(4, eps).value);
  const double vs = minimize_witness(s, eps, PlanMode::Local, restarts(40)).best_value;
  const double vg = minimize_witness(g, eps, PlanMode::Local, restarts(40)).best_value;
  v.note("singlet", fmt(vs)).note("ghz4", fmt(vg));
  v.require(vs >= -1e-4, "shifted singlet >= -1e-4");
  v.require(vg >= -1e-4, "shifted GHZ4 >= -1e-4");
}

// 9 -------------------------------------------------------------------------
void loss_decomposition(Verdict& v) {
  const double eps = pi / 180;
  const OptimizerOptions opts = restarts(40);
  for (double alpha : {0.0, pi / 32, pi / 16, 3 * pi / 32}) {
    const FidelityProblem problem(eps, alpha, PlanMode::Local, opts.mle);
    const OptimizationResult r = minimize_fidelity_problem(problem, opts);
    if (r.best_restart < 0) {
      v.require(false, "optimizer produced a point at alpha=" + fmt(alpha));
      continue;
    }
    const auto d = fidelity_loss_decomposition(problem.reconstruction(r.argmin).rho, problem.state(r.argmin).density());
    const double share = d.marginal_term / d.total;
    v.note("alpha=" + fmt(alpha) + " loss", fmt(d.total)).note("share", fmt(share));
    if (alpha == 0.0) v.require(std::abs(d.total - 0.025) <= 0.0025, "alpha=0 total loss 0.025 within 10%");
    v.require(share >= 0.84 && share <= 0.94, "marginal share in [0.84, 0.94] at alpha=" + fmt(alpha));
  }
}

// 10 ------------------------------------------------------------------------
void correlated_mode(Verdict& v) {
  const double eps = pi / 180;
  const OptimizerOptions opts = restarts(40);
  for (double alpha : {0.0, pi / 4}) {
    const FidelityProblem local_problem(eps, alpha, PlanMode::Local, opts.mle);
    const OptimizationResult local = minimize_fidelity_problem(local_problem, opts);
    OptimizerOptions corr_opts = opts;
    if (local.best_restart >= 0) corr_opts.seeds.push_back(lift_to_correlated(local_problem, local.argmin));
    const OptimizationResult corr = minimize_fidelity_problem(FidelityProblem(eps, alpha, PlanMode::Correlated, opts.mle), corr_opts);
    const double ll = 1.0 - local.best_value, lc = 1.0 - corr.best_value;
    v.note("alpha=" + fmt(alpha) + " local", fmt(ll)).note("correlated", fmt(lc));
    if (alpha == 0.0) v.require(std::abs(lc - ll) <= 0.05 * ll, "equal within 5% at alpha=0");
    else v.require(lc > ll, "correlated loss exceeds local at alpha=pi/4");
  }
}

// 11 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism(Verdict& v, const fs::path& config_dir) {
  // Full shipped configs where they are cheap, trimmed copies of the
  // expensive ones (same experiment code path, smaller grid and pool).
  std::vector<std::pair<std::string, cli::ExperimentConfig>> configs;
  for (const char* name : {"fig3", "fig6", "bound-check", "custom-singlet"})
    configs.emplace_back(name, cli::load_config(config_dir / (std::string(name) + ".json")));
  configs.emplace_back("fig4 (trimmed)", cli::parse_config(R"({"experiment": "fig4", "seed": 5, "restarts": 4, "alpha_deg": [0, 30]})"));
  configs.emplace_back("fig10 (trimmed)",
                       cli::parse_config(R"({"experiment": "fig10", "seed": 5, "restarts": 4, "epsilon_deg": 1, "alpha_deg": [0, 10]})"));
  configs.emplace_back("fig11 (trimmed)",
                       cli::parse_config(R"({"experiment": "fig11", "seed": 5, "restarts": 4, "epsilon_deg": 1, "alpha_deg": [0, 45]})"));

  const fs::path root = fs::temp_directory_path() / "misalign_acceptance_determinism";
  int compared = 0;
  for (auto& [label, cfg] : configs) {
    std::vector<std::string> first;
    for (int run = 0; run < 2; ++run) {
      cli::ExperimentConfig c = cfg;
      cli::Overrides o;
      o.out_dir = root / std::to_string(run);
      o.threads = run == 0 ? 0 : 1;
      fs::remove_all(*o.out_dir);
      cli::apply_overrides(c, o);
      std::ostringstream log;
      const cli::RunReport rep = cli::run_experiment(c, log);
      v.require(rep.exit_code == cli::kOk, label + " exits cleanly");
      for (std::size_t i = 0; i < rep.outputs.size(); ++i) {
        if (run == 0) {
          first.push_back(slurp(rep.outputs[i]));
        } else {
          ++compared;
          v.require(i < first.size() && first[i] == slurp(rep.outputs[i]), label + " output " + rep.outputs[i].filename().string());
        }
      }
    }
  }
  fs::remove_all(root);
  v.note("configs", configs.size()).note("files compared", compared);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::vector<int> known_red;
  std::string report_path;
  app.add_option("criteria", only, "run only these criteria (default: all)");
  app.add_option("--report", report_path, "also write the criterion lines to this file");
  app.add_option("--known-red", known_red, "criteria expected to fail; reported, but not fatal");
  CLI11_PARSE(app, argc, argv);

  const fs::path config_dir = MISALIGN_CONFIG_DIR;
  const std::vector<Criterion> criteria{
      {1, "closed-form worst case at 2 deg", 1, closed_form_worst_case},
      {2, "product curves f_n = f^n", 60, product_curves},
      {3, "single-qubit floor", 300, single_qubit_floor},
      {4, "MLE residual, monotonicity, product preservation", 300, mle_properties},
      {5, "boundary geometry outside the sphere", 120, boundary_geometry},
      {6, "two-qubit susceptibility endpoints", 1800, susceptibility_endpoints},
      {7, "witness corrections", 1800, witness_corrections},
      {8, "witness shift", 600, witness_shift},
      {9, "fidelity-loss decomposition", 900, loss_decomposition},
      {10, "correlated vs local deviations", 1800, correlated_mode},
      {11, "byte-identical reruns", 3600, [&](Verdict& v) { determinism(v, config_dir); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> red(known_red.begin(), known_red.end());
  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  bool ok = true;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < c.limit_s, "runtime limit");
    const bool expected_red = red.count(c.id) > 0;
    if (v.pass == expected_red) ok = false;
    char times[64];
    std::snprintf(times, sizeof times, "[%.1f s of %.0f s]", secs, c.limit_s);
    std::ostringstream line;
    line << "criterion " << (c.id < 10 ? " " : "") << c.id << ": " << (v.pass ? "PASS" : "FAIL")
         << (expected_red ? (v.pass ? " (listed as known red)" : " (known red)") : "") << "  " << c.title << " | "
         << v.detail.str() << times << "\n";
    std::cout << line.str() << std::flush;
    if (report.is_open()) report << line.str() << std::flush;
  }
  return ok ? 0 : 1;
}
