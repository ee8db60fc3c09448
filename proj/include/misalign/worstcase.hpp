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

// Nested worst-case searches: over misaligned plans and input states for the
// tomography fidelity, and over deformed witness decompositions and pure
// biseparable states for the witness value. Each search is a multi-restart
// run of the box-constrained quasi-Newton solver; restarts are independent
// and may run on an OpenMP pool.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "misalign/box_quasi_newton.hpp"
#include "misalign/misalignment.hpp"
#include "misalign/quantum.hpp"
#include "misalign/rng.hpp"
#include "misalign/tomography.hpp"
#include "misalign/witness.hpp"

namespace misalign {

enum class Execution { Parallel, Serial };

struct OptimizerOptions {
  int restarts = 40;
  std::uint64_t seed = 1;
  /// Restart pool size for Execution::Parallel; 0 means the OpenMP default.
  int threads = 0;
  Execution execution = Execution::Parallel;
  /// Reseeded random retries for a restart whose run fails numerically.
  int retries = 1;
  /// Include the deterministic fixture seeds ahead of the random draws.
  bool use_fixtures = true;
  QuasiNewtonOptions qn = default_qn();
  /// Inner reconstruction for the fidelity objective.
  MleOptions mle = default_mle();
  /// Extra starting points (in the problem's own parametrization) run right
  /// after the fixtures; they count towards `restarts`.
  std::vector<Eigen::VectorXd> seeds;
  /// Witness searches take (bipartition mask, parameters) pairs instead.
  std::vector<std::pair<unsigned, Eigen::VectorXd>> witness_seeds;

  static QuasiNewtonOptions default_qn() {
    QuasiNewtonOptions q;
    q.max_iter = 300;
    q.gtol = 1e-9;
    q.ftol = 1e-13;
    q.fd_step = 1e-5;
    return q;
  }
  static MleOptions default_mle() {
    MleOptions m;
    m.tol = 1e-8;
    return m;
  }
};

struct RestartRecord {
  int index = 0;
  std::string origin;  // "fixture:<name>", "seed", "random"
  double value = 0.0;  // NaN when the restart failed
  bool ok = false;
  int attempts = 1;
  int iterations = 0;
  std::string status;
  std::string note;
};

struct OptimizationResult {
  double best_value = 0.0;
  Eigen::VectorXd argmin;
  int best_restart = -1;
  int restarts = 0;
  int failed_restarts = 0;
  std::uint64_t seed = 0;
  /// Witness searches: the cut on which argmin is expressed.
  unsigned bipartition_mask = 0;
  std::vector<double> per_restart;  // NaN entries for failed restarts
  std::vector<RestartRecord> records;
};

// ---------------------------------------------------------------------------
// Tomography fidelity problem.

/// Variables, in order:
///   plan: per party j, per direction slot s (setting k in local mode, joint
///         tuple in correlated mode): (p, azimuth) with the actual direction
///         deviate(m, p * eps, azimuth), p in [0, 1];
///   state: per party j: (theta_j, phi_j, chi_j) with
///         |+_j> = (cos theta/2, e^{i phi} sin theta/2),
///         |-_j> = e^{i chi} (-e^{-i phi} sin theta/2, cos theta/2),
///         and |psi_alpha> = cos(alpha) |+ +> + sin(alpha) |- ->.
class FidelityProblem {
 public:
  FidelityProblem(double eps, double alpha, PlanMode mode, MleOptions mle = OptimizerOptions::default_mle());

  int n_vars() const { return plan_vars_ + 6; }
  int n_plan_vars() const { return plan_vars_; }
  BoxBounds bounds() const;
  double eps() const { return eps_; }
  double alpha() const { return alpha_; }
  PlanMode mode() const { return mode_; }

  PureState state(const Eigen::VectorXd& x) const;
  MeasurementPlan plan(const Eigen::VectorXd& x) const;
  /// Reconstruction of simulate(state(x), plan(x)) under the Pauli plan.
  ReconstructionResult reconstruction(const Eigen::VectorXd& x) const;
  /// F(|psi_alpha>, reconstruction). Convergence of the inner MLE is checked
  /// separately by the search on the final point.
  double objective(const Eigen::VectorXd& x) const;

  /// Parameters reproducing a (state, plan) pair whose state has the Schmidt
  /// form cos(alpha)|u u'> + e^{i c} sin(alpha)|v v'>, given the per-party
  /// "+" vectors. The plan must be in this problem's mode (a local plan is
  /// lifted in correlated mode).
  Eigen::VectorXd encode(const PureState& state, const std::array<CVector, 2>& plus_vectors,
                         const MeasurementPlan& plan) const;
  Eigen::VectorXd random_start(CounterRng& rng) const;

 private:
  double eps_;
  double alpha_;
  PlanMode mode_;
  MleOptions mle_;
  int slots_;      // direction slots per party
  int plan_vars_;  // 2 * 2 * slots_
  MeasurementPlan intended_;
};

// ---------------------------------------------------------------------------
// Witness problem.

/// Variables, in order:
///   plan: per party j, per deformable setting k (local mode) or per term
///         (correlated mode): (p, azimuth) as above;
///   state: a pure product across the bipartition (S, complement), as the
///         real and imaginary parts of the unnormalized amplitudes of the S
///         factor followed by those of the complement factor.
///
/// Settings used only by projector terms (sigma_z for the GHZ witness) stay
/// at their intended directions unless `deform_projector_settings` is set.
class WitnessProblem {
 public:
  WitnessProblem(WitnessSpec spec, double eps, PlanMode mode, unsigned bipartition_mask,
                 bool deform_projector_settings = false);

  int n_vars() const { return plan_vars_ + state_vars_; }
  int n_plan_vars() const { return plan_vars_; }
  BoxBounds bounds() const;
  unsigned bipartition_mask() const { return mask_; }
  const WitnessSpec& spec() const { return spec_; }

  CVector state(const Eigen::VectorXd& x) const;
  double objective(const Eigen::VectorXd& x) const;
  /// Value with the analytic gradient.
  double objective(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;
  /// Local plan equivalent of x (local mode only).
  MeasurementPlan plan(const Eigen::VectorXd& x) const;

  /// Parameters for a state that is a product across this bipartition and a
  /// local plan. Throws when the state is not such a product (1e-8).
  Eigen::VectorXd encode(const PureState& state, const MeasurementPlan& plan) const;
  Eigen::VectorXd random_start(CounterRng& rng) const;

 private:
  struct Slot {
    int party;
    int setting;
    BlochVector intended;
  };
  double evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
  BlochVector direction(const Eigen::VectorXd& x, int slot) const;

  WitnessSpec spec_;
  double eps_;
  PlanMode mode_;
  unsigned mask_;
  bool deform_projectors_;
  std::vector<Slot> slots_;
  std::vector<std::vector<int>> term_slots_;       // [term][party]
  std::vector<std::vector<int>> projector_slots_;  // [projector term][party]
  std::vector<int> part_a_, part_b_;               // parties of S and of the complement
  int plan_vars_ = 0;
  int state_vars_ = 0;
};

/// All 2^{n-1} - 1 bipartitions as masks of the parties in S; party n-1 is
/// always in the complement so each cut appears once.
std::vector<unsigned> enumerate_bipartitions(int n);

// ---------------------------------------------------------------------------
// Fixtures.

enum class FixtureKind { LowAlpha, HighAlpha, EvenGhz, OddGhz };

struct FixtureParams {
  double eps = 0.0;
  double alpha = 0.0;  // LowAlpha, HighAlpha
  int n = 0;           // EvenGhz, OddGhz
};

struct Fixture {
  PureState state;
  MeasurementPlan plan;
  /// False when the parameters lie outside the region where the fixture is
  /// known to be near-optimal (low: concurrence <= 0.56, high: >= 0.87,
  /// GHZ: eps <= pi/(2n)).
  bool in_domain = true;
  /// Per-party "+" basis vectors (two-qubit fixtures only).
  std::vector<CVector> plus_vectors;
};

/// Two-qubit fixtures for the tomography objective and GHZ fixtures for the
/// witness objective.
///   LowAlpha:  e^{2 pi i/3} cos(a) |s+ s+> + sin(a) |s- s->, open triad axes.
///   HighAlpha: cos(a) |t+ t+> + sin(a) |t- t->, t the eigenbasis of
///              sin(theta)/sqrt2 (sx + sz) + cos(theta) sy with the phase
///              convention <0|t+> = e^{i phi} |c+|, <0|t-> = |c-|; the axes
///              (c, s cos g, s sin g), (-s/sqrt2, c, -s/sqrt2),
///              (s sin g, s cos g, c).
///   EvenGhz/OddGhz: biseparable_fixture with ghz_plan.
Fixture appendix_fixture(FixtureKind kind, const FixtureParams& params);

inline constexpr double kHighAlphaTheta = 0.9961;
inline constexpr double kHighAlphaPhi = 0.4980;
inline constexpr double kHighAlphaGamma = 2.7946;

/// |psi_s+->: eigenvectors of s.sigma, s = (1, 1, 1)/sqrt3, with the phase
/// convention (|0> +- sqrt(2 -+ sqrt3) e^{i pi/4} |1>) / sqrt(3 -+ sqrt3).
CVector psi_s(int sign);

// ---------------------------------------------------------------------------
// Searches.

/// Worst-case fidelity F(|psi_alpha>, reconstruction) over local plans within
/// eps and local bases. Restarts 0 and 1 are the low- and high-alpha
/// fixtures.
OptimizationResult minimize_fidelity(double eps, double alpha, const OptimizerOptions& opts = {});

/// Same with correlated deviations. Unless opts.seeds is non-empty the local
/// optimum is computed first and lifted into the correlated space as a seed,
/// so the correlated result never exceeds the local one.
OptimizationResult minimize_fidelity_correlated(double eps, double alpha, const OptimizerOptions& opts = {});

/// Parameters of the correlated problem describing the same plan and state
/// as x in the local problem (every joint tuple repeats the local direction).
Eigen::VectorXd lift_to_correlated(const FidelityProblem& local, const Eigen::VectorXd& x);

/// Generic driver for either problem type.
OptimizationResult minimize_fidelity_problem(const FidelityProblem& problem, const OptimizerOptions& opts);

/// Worst-case witness value over deformations within eps and pure
/// biseparable states; restarts cycle through all bipartitions, with the
/// known fixture (singlet or GHZ n >= 4) first.
OptimizationResult minimize_witness(const WitnessSpec& spec, double eps, PlanMode mode = PlanMode::Local,
                                    const OptimizerOptions& opts = {}, bool deform_projector_settings = false);

struct SusceptibilityRow {
  double alpha = 0.0;
  double concurrence = 0.0;
  double worst_fidelity = 0.0;
  double susceptibility = 0.0;
  int failed_restarts = 0;
};

/// S(alpha) = (min F - 1) / eps_probe on each grid point.
std::vector<SusceptibilityRow> susceptibility_curve(const std::vector<double>& alphas, double eps_probe,
                                                    const OptimizerOptions& opts = {});

struct CorrectionRow {
  double eps = 0.0;
  std::optional<double> closed_form;
  double optimized = 0.0;
  int failed_restarts = 0;
};

/// minimize_witness on every grid point, with the matching closed form when
/// one exists.
std::vector<CorrectionRow> correction_curve(const WitnessSpec& spec, const std::vector<double>& eps_grid,
                                            PlanMode mode = PlanMode::Local, const OptimizerOptions& opts = {});

/// Closed-form correction for the singlet witness or the GHZ witness of
/// size n >= 4; empty for anything else.
std::optional<double> known_correction(const WitnessSpec& spec, double eps);

/// Which built-in family a spec belongs to: 2 for the singlet witness, n for
/// the GHZ witness of size n, 0 otherwise.
int witness_family(const WitnessSpec& spec);

}  // namespace misalign
