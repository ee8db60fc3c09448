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

#include <array>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>

/// Dense linear algebra on n-qubit operators.
///
/// Conventions used throughout the library:
///  - parties are 0-indexed; party 0 is the most significant factor of every
///    Kronecker product, so |q0 q1 ... q(n-1)> has index sum q_j 2^(n-1-j);
///  - a measurement outcome a_j = +1 is encoded as bit 0, a_j = -1 as bit 1,
///    with the same significance order as the parties.
namespace misalign {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix2c = Eigen::Matrix2cd;

/// Real 3-vector on (or inside) the Bloch sphere. Used both for qubit states
/// (norm <= 1) and for projective measurement directions (norm == 1).
using BlochVector = Eigen::Vector3d;

inline constexpr double kValidityTol = 1e-10;
inline constexpr double kRoundTripTol = 1e-12;

/// The Pauli matrix sigma_k for k = 0 (identity), 1 (x), 2 (y), 3 (z).
const Matrix2c& pauli(int k);

/// v . sigma for a real 3-vector.
Matrix2c bloch_observable(const BlochVector& v);

/// Projector (1 + a n.sigma)/2 onto outcome a = +-1 along direction n.
Matrix2c outcome_projector(const BlochVector& n, int a);

/// Unitary whose columns are the +1 and -1 eigenvectors of n.sigma.
Matrix2c measurement_basis(const BlochVector& n);

/// Hermitian, PSD, unit-trace matrix of dimension 2^n.
class DensityMatrix {
 public:
  /// Validates against the tolerance; throws std::invalid_argument.
  explicit DensityMatrix(CMatrix m, double tol = kValidityTol);

  const CMatrix& matrix() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }
  int n_qubits() const;

  /// tr(rho^2) == 1 within tol.
  bool is_pure(double tol = 1e-8) const;

 private:
  CMatrix m_;
};

/// Normalized state vector of dimension 2^n.
class PureState {
 public:
  /// Throws std::invalid_argument unless ||amplitudes|| == 1 within 1e-12 and
  /// the dimension is a power of two.
  explicit PureState(CVector amplitudes);

  /// Normalizes first; throws on a zero vector.
  static PureState normalized(CVector amplitudes);

  /// Computational basis vector |index> on n qubits.
  static PureState basis(int n_qubits, int index);

  const CVector& amplitudes() const { return a_; }
  int dim() const { return static_cast<int>(a_.size()); }
  int n_qubits() const;

  DensityMatrix density() const;

  /// Same ray with the first nonzero amplitude made real positive.
  PureState canonical_phase() const;

 private:
  CVector a_;
};

/// (1 + v.sigma)/2. Throws std::invalid_argument when ||v|| > 1 + 1e-12.
DensityMatrix state_from_bloch(const BlochVector& v);

/// v_k = tr(rho sigma_k). Throws std::invalid_argument unless dim == 2.
BlochVector bloch_from_state(const DensityMatrix& rho);

/// Uhlmann-Jozsa fidelity (tr sqrt(sqrt(tau) rho sqrt(tau)))^2.
///
/// Eigenvalues below kEigenCutoff are clamped to zero before square roots are
/// taken, which keeps rank-deficient (pure) inputs exact to rounding.
double fidelity(const DensityMatrix& tau, const DensityMatrix& rho);

inline constexpr double kEigenCutoff = 1e-13;

/// Principal square root of a Hermitian PSD matrix (negative and sub-cutoff
/// eigenvalues clamped to zero).
CMatrix sqrt_psd(const CMatrix& m);

/// Kronecker product a (x) b.
CMatrix kron(const CMatrix& a, const CMatrix& b);
CVector kron(const CVector& a, const CVector& b);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);
PureState tensor(const PureState& a, const PureState& b);

/// Reduced state on the parties listed in `keep` (0-indexed, any order; the
/// result orders them ascending). Throws on an empty, duplicated or
/// out-of-range subset.
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

/// |<psi| sigma_y (x) sigma_y |psi*>| for a two-qubit pure state.
double concurrence(const PureState& psi);

/// Two-qubit Pauli coefficients: rho = (1/4)(1 + t1.sigma (x) 1 + 1 (x) t2.sigma
/// + sum_ij T_ij sigma_i (x) sigma_j).
struct PauliDecomposition {
  BlochVector t1;
  BlochVector t2;
  Eigen::Matrix3d T;

  /// T - t1 t2^T, the correlations not explained by the marginals.
  Eigen::Matrix3d excess_correlation() const { return T - t1 * t2.transpose(); }

  CMatrix reassemble() const;
};

/// Throws std::invalid_argument unless dim == 4.
PauliDecomposition pauli_decompose(const DensityMatrix& rho);

/// Hermitian eigenvalues in ascending order.
Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m);

/// (1/2) sum |eigenvalues(a - b)| for Hermitian a, b.
double trace_distance(const CMatrix& a, const CMatrix& b);

/// max |m - m^dagger| elementwise.
double hermiticity_defect(const CMatrix& m);

/// Expectation tr(op rho).
double expectation(const CMatrix& op, const CMatrix& rho);

/// Kronecker product of one 2x2 factor per party.
CMatrix kron_all(std::span<const Matrix2c> factors);

}  // namespace misalign
