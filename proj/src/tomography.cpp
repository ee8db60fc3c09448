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

#include "misalign/tomography.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "tensor_ops.hpp"

namespace misalign {

namespace {

void require_matching_shape(const OutcomeStatistics& stats, const MeasurementPlan& plan) {
  if (stats.n_parties() != plan.n_parties()) throw std::invalid_argument("statistics and plan differ in party count");
  for (int j = 0; j < plan.n_parties(); ++j)
    if (stats.settings_shape()[j] != plan.n_settings(j))
      throw std::invalid_argument("statistics and plan differ in setting count");
}

/// Per-party map from Pauli coefficients (1, r_x, r_y, r_z) to the
/// probabilities of (setting, outcome) pairs; row 2k + b, b = 0 for +1.
Eigen::MatrixXd local_design(const std::vector<BlochVector>& intended) {
  const int K = static_cast<int>(intended.size());
  Eigen::MatrixXd a(2 * K, 4);
  for (int k = 0; k < K; ++k) {
    for (int b = 0; b < 2; ++b) {
      const double sign = b == 0 ? 1.0 : -1.0;
      a(2 * k + b, 0) = 0.5;
      for (int i = 0; i < 3; ++i) a(2 * k + b, i + 1) = 0.5 * sign * intended[k](i);
    }
  }
  return a;
}

struct LinearSolution {
  CMatrix rho;
  double misfit;
};

LinearSolution solve_linear(const OutcomeStatistics& stats, const MeasurementPlan& plan) {
  require_matching_shape(stats, plan);
  const int n = plan.n_parties();

  std::vector<Eigen::MatrixXd> design, pinv;
  for (int j = 0; j < n; ++j) {
    design.push_back(local_design(plan.intended_table()[j]));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(design.back());
    if (svd.singularValues().minCoeff() < 1e-9)
      throw NotTomographicallyComplete("intended settings of party " + std::to_string(j) +
                                       " are not tomographically complete");
    pinv.push_back(design.back().completeOrthogonalDecomposition().pseudoInverse());
  }

  // Data tensor indexed by ((k_0, a_0), ..., (k_{n-1}, a_{n-1})).
  std::vector<int> dims(n);
  long total = 1;
  for (int j = 0; j < n; ++j) total *= (dims[j] = 2 * plan.n_settings(j));
  Eigen::VectorXd data(total);
  for (int joint = 0; joint < stats.n_joint_settings(); ++joint) {
    const std::vector<int> k = plan.joint_tuple(joint);
    for (int a = 0; a < stats.n_outcomes(); ++a) {
      long idx = 0;
      for (int j = 0; j < n; ++j) idx = idx * dims[j] + 2 * k[j] + ((a >> (n - 1 - j)) & 1);
      data(idx) = stats.probability(joint, a);
    }
  }

  Eigen::VectorXd coeffs = data;
  for (int j = 0; j < n; ++j) coeffs = detail::mode_product(coeffs, dims, j, pinv[j]);

  Eigen::VectorXd fitted = coeffs;
  for (int j = 0; j < n; ++j) fitted = detail::mode_product(fitted, dims, j, design[j]);
  const double misfit = (fitted - data).cwiseAbs().maxCoeff();

  // Pauli coefficients to matrix entries, one party at a time.
  CMatrix to_entries(4, 4);
  for (int s = 0; s < 4; ++s)
    for (int i = 0; i < 2; ++i)
      for (int ip = 0; ip < 2; ++ip) to_entries(2 * i + ip, s) = pauli(s)(i, ip);
  for (int j = 0; j < n; ++j) dims[j] = 4;
  CVector entries = coeffs.cast<cplx>();
  for (int j = 0; j < n; ++j) entries = detail::mode_product(entries, dims, j, to_entries);

  const int d = 1 << n;
  CMatrix rho(d, d);
  for (long flat = 0; flat < entries.size(); ++flat) {
    int row = 0, col = 0;
    for (int j = 0; j < n; ++j) {
      const int pair = static_cast<int>((flat >> (2 * (n - 1 - j))) & 3);
      row = (row << 1) | (pair >> 1);
      col = (col << 1) | (pair & 1);
    }
    rho(row, col) = entries(flat) / static_cast<double>(d);
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return {std::move(rho), misfit};
}

}  // namespace

// ---------------------------------------------------------------------------

OutcomeStatistics::OutcomeStatistics(std::vector<int> settings_shape, Eigen::MatrixXd table)
    : shape_(std::move(settings_shape)), table_(std::move(table)) {
  if (shape_.empty() || shape_.size() > 16) throw std::invalid_argument("statistics need 1..16 parties");
  long joint = 1;
  for (int k : shape_) {
    if (k < 1) throw std::invalid_argument("statistics: setting counts must be positive");
    joint *= k;
  }
  if (table_.rows() != joint) throw std::invalid_argument("statistics: row count does not match settings");
  if (table_.cols() != (1L << shape_.size())) throw std::invalid_argument("statistics: column count must be 2^n");
  for (Eigen::Index r = 0; r < table_.rows(); ++r) {
    if (std::abs(table_.row(r).sum() - 1.0) > kRoundTripTol)
      throw std::invalid_argument("statistics: a conditional distribution does not sum to 1");
    for (Eigen::Index c = 0; c < table_.cols(); ++c) {
      const double p = table_(r, c);
      if (!(p >= -kRoundTripTol && p <= 1.0 + kRoundTripTol))
        throw std::invalid_argument("statistics: probability outside [0, 1]");
    }
  }
}

double OutcomeStatistics::correlator(int joint_setting, unsigned party_mask) const {
  double acc = 0.0;
  for (int a = 0; a < n_outcomes(); ++a)
    acc += (std::popcount(static_cast<unsigned>(a) & party_mask) % 2 ? -1.0 : 1.0) * table_(joint_setting, a);
  return acc;
}

Eigen::VectorXd OutcomeStatistics::correlators() const {
  if (n_parties() != 1) throw std::logic_error("correlators() is defined for single-party statistics");
  return table_.col(0) - table_.col(1);
}

UnphysicalReconstruction::UnphysicalReconstruction(CMatrix raw, double min_eigenvalue)
    : std::runtime_error("linear inversion produced an unphysical state (min eigenvalue " +
                         std::to_string(min_eigenvalue) + ")"),
      raw_(std::move(raw)),
      min_eig_(min_eigenvalue) {}

OutcomeStatistics simulate_statistics(const DensityMatrix& tau, const MeasurementPlan& plan) {
  const int n = plan.n_parties();
  if (tau.n_qubits() != n) throw std::invalid_argument("simulate_statistics: state and plan dimension mismatch");
  const int joints = plan.n_joint_settings();
  const int d = 1 << n;
  Eigen::MatrixXd table(joints, d);
  std::vector<Matrix2c> bases(n);
  for (int joint = 0; joint < joints; ++joint) {
    const std::vector<int> k = plan.joint_tuple(joint);
    for (int j = 0; j < n; ++j) bases[j] = measurement_basis(plan.actual(j, k));
    const CMatrix u = kron_all(bases);
    const CMatrix v = tau.matrix() * u;
    for (int a = 0; a < d; ++a) table(joint, a) = u.col(a).dot(v.col(a)).real();
  }
  std::vector<int> shape(n);
  for (int j = 0; j < n; ++j) shape[j] = plan.n_settings(j);
  return OutcomeStatistics(std::move(shape), std::move(table));
}

CMatrix linear_inversion_matrix(const OutcomeStatistics& stats, const MeasurementPlan& intended) {
  return solve_linear(stats, intended).rho;
}

ReconstructionResult linear_inversion(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                      const LinearInversionOptions& opts) {
  LinearSolution sol = solve_linear(stats, intended);
  const double min_eig = hermitian_eigenvalues(sol.rho)(0);
  if (min_eig < -kPhysicalityTol) {
    if (!opts.mle_fallback) throw UnphysicalReconstruction(std::move(sol.rho), min_eig);
    ReconstructionResult r = mle_reconstruct(stats, intended, opts.mle);
    r.linear_inversion_physical = false;
    return r;
  }
  return ReconstructionResult{DensityMatrix(std::move(sol.rho)), ReconstructionMethod::LinearInversion, true, 0,
                              sol.misfit, true, {}};
}

ReconstructionResult reconstruct(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                 const MleOptions& mle) {
  return linear_inversion(stats, intended, LinearInversionOptions{true, mle});
}

// ---------------------------------------------------------------------------

double validated_epsilon_limit() { return std::acos(std::sqrt(2.0 / 3.0)); }

BoundValue worst_case_fidelity_single(double eps) {
  const double value = 0.5 * (1.0 + std::cos(eps) - std::numbers::sqrt2 * std::sin(eps));
  return {value, eps >= 0.0 && eps <= validated_epsilon_limit()};
}

BoundValue worst_case_fidelity_product(int n, double eps) {
  if (n < 1) throw std::invalid_argument("worst_case_fidelity_product needs n >= 1");
  const BoundValue single = worst_case_fidelity_single(eps);
  return {std::pow(single.value, n), single.in_validated_range};
}

double lambda_ball_radius(double eps) { return 1.0 - std::cos(eps) + std::numbers::sqrt2 * std::sin(eps); }

double susceptibility(const std::function<double(double)>& curve, double probe) {
  if (!(probe > 0.0)) throw std::invalid_argument("susceptibility probe must be positive");
  return (curve(probe) - 1.0) / probe;
}

FidelityLossDecomposition fidelity_loss_decomposition(const DensityMatrix& rho, const DensityMatrix& tau) {
  if (rho.dim() != 4 || tau.dim() != 4) throw std::invalid_argument("fidelity_loss_decomposition needs two qubits");
  if (!tau.is_pure(1e-8)) throw std::invalid_argument("fidelity_loss_decomposition needs a pure target state");
  const int first[] = {0};
  const int second[] = {1};
  const CMatrix rho_s = kron(partial_trace(rho, first).matrix(), partial_trace(rho, second).matrix());
  const CMatrix tau_s = kron(partial_trace(tau, first).matrix(), partial_trace(tau, second).matrix());
  const double total = 1.0 - expectation(rho.matrix(), tau.matrix());
  const double marginal = expectation(rho_s, rho_s - tau_s);
  return {total, marginal, total - marginal};
}

}  // namespace misalign
