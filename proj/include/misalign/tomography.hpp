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

#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "misalign/misalignment.hpp"
#include "misalign/quantum.hpp"

namespace misalign {

/// Conditional outcome probabilities P(a | k) for every joint setting tuple k.
///
/// Rows of the table are flattened joint setting tuples (party 0 most
/// significant, as in MeasurementPlan::joint_index); columns are outcome
/// tuples a in {+1,-1}^n with bit 0 meaning +1.
class OutcomeStatistics {
 public:
  /// Throws std::invalid_argument when a row does not sum to 1 within 1e-12 or
  /// an entry leaves [-1e-12, 1 + 1e-12].
  OutcomeStatistics(std::vector<int> settings_shape, Eigen::MatrixXd table);

  int n_parties() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& settings_shape() const { return shape_; }
  int n_joint_settings() const { return static_cast<int>(table_.rows()); }
  int n_outcomes() const { return static_cast<int>(table_.cols()); }

  double probability(int joint_setting, int outcome) const { return table_(joint_setting, outcome); }
  const Eigen::MatrixXd& table() const { return table_; }

  /// E[prod_{j in parties} a_j] for one joint setting. `party_mask` bit
  /// (n-1-j) selects party j.
  double correlator(int joint_setting, unsigned party_mask) const;

  /// Single-party correlator vector c_k = P(+1|k) - P(-1|k).
  /// Throws std::logic_error unless n_parties() == 1.
  Eigen::VectorXd correlators() const;

 private:
  std::vector<int> shape_;
  Eigen::MatrixXd table_;
};

enum class ReconstructionMethod { LinearInversion, MaximumLikelihood };

struct ReconstructionResult {
  DensityMatrix rho;
  ReconstructionMethod method;
  bool converged = true;
  long iterations = 0;
  /// MLE: trace-norm fixed-point residual. Linear inversion: max misfit of
  /// the least-squares solution against the data.
  double residual = 0.0;
  /// False when linear inversion produced an eigenvalue below -1e-10.
  bool linear_inversion_physical = true;
  /// Log-likelihood after every accepted MLE iteration (only when requested).
  std::vector<double> likelihood_trace;
};

struct MleOptions {
  double tol = 1e-9;
  long max_iter = 100000;
  bool record_likelihood = false;
  /// Upper limit of the adaptive step exponent (1 = plain R rho R).
  double max_exponent = 1e8;
  /// Smallest eigenvalue of the starting point (the clipped linear estimate).
  double start_floor = 1e-10;
  /// Periodic quasi-Newton ascent in the factor A of rho = A A^dagger, first
  /// after `polish_after` iterations and then every `polish_every`.
  bool polish = true;
  long polish_after = 20;
  long polish_every = 200;
};

struct LinearInversionOptions {
  bool mle_fallback = false;
  MleOptions mle;
};

/// Thrown by linear_inversion when the solution is not PSD and no fallback was
/// requested.
class UnphysicalReconstruction : public std::runtime_error {
 public:
  UnphysicalReconstruction(CMatrix raw, double min_eigenvalue);
  const CMatrix& raw() const { return raw_; }
  double min_eigenvalue() const { return min_eig_; }

 private:
  CMatrix raw_;
  double min_eig_;
};

/// Thrown when the intended settings of a party do not span all Pauli
/// directions.
class NotTomographicallyComplete : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPhysicalityTol = 1e-10;
inline constexpr double kZeroProbability = 1e-14;

/// Born-rule statistics of tau measured along the plan's actual directions.
OutcomeStatistics simulate_statistics(const DensityMatrix& tau, const MeasurementPlan& plan);

/// Least-squares solution of the Born-rule equations with the plan's intended
/// directions. The returned matrix is Hermitian with unit trace but may have
/// negative eigenvalues.
CMatrix linear_inversion_matrix(const OutcomeStatistics& stats, const MeasurementPlan& intended);

/// Linear inversion; unphysical solutions either throw UnphysicalReconstruction
/// or, with opts.mle_fallback, are replaced by mle_reconstruct.
ReconstructionResult linear_inversion(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                      const LinearInversionOptions& opts = {});

/// Maximum-likelihood state for the given statistics and intended POVMs.
/// Non-convergence is reported through `converged`, never thrown.
ReconstructionResult mle_reconstruct(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                     const MleOptions& opts = {});

/// Linear inversion when physical, MLE otherwise.
ReconstructionResult reconstruct(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                 const MleOptions& mle = {});

/// sum_{k,a} P_obs(a|k) log tr(rho Pi_{a,k}) over intended POVM elements,
/// skipping P_obs < 1e-14.
double log_likelihood(const OutcomeStatistics& stats, const MeasurementPlan& intended, const CMatrix& rho);

/// || N[R rho R] - rho ||_1 with R the likelihood-gradient operator at rho.
double mle_fixed_point_residual(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                const DensityMatrix& rho);

/// A closed-form bound together with whether eps lies where it is proven.
struct BoundValue {
  double value;
  bool in_validated_range;
};

/// Largest eps for which the single-qubit bound is established: acos sqrt(2/3).
double validated_epsilon_limit();

/// f(eps) = (1 + cos eps - sqrt2 sin eps) / 2.
BoundValue worst_case_fidelity_single(double eps);

/// f(eps)^n.
BoundValue worst_case_fidelity_product(int n, double eps);

/// lambda(eps) = 1 - cos eps + sqrt2 sin eps, radius factor of the ball that
/// contains every correlator vector compatible with a state and eps.
double lambda_ball_radius(double eps);

inline constexpr double kDefaultSusceptibilityProbe = std::numbers::pi / 180.0;

/// Forward-difference slope (curve(probe) - 1) / probe.
double susceptibility(const std::function<double(double)>& curve, double probe = kDefaultSusceptibilityProbe);

struct FidelityLossDecomposition {
  double total;
  double marginal_term;
  double correlation_term;
};

/// Loss 1 - tr(rho tau) of a two-qubit reconstruction against a pure target,
/// split into the part carried by the products of marginals and the rest.
/// Throws std::invalid_argument unless tau is pure within 1e-8.
FidelityLossDecomposition fidelity_loss_decomposition(const DensityMatrix& rho, const DensityMatrix& tau);

}  // namespace misalign
