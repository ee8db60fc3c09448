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

#include "misalign/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace misalign {

namespace {

bool is_power_of_two(Eigen::Index d) { return d > 0 && std::has_single_bit(static_cast<unsigned long>(d)); }

int log2_dim(Eigen::Index d) { return std::countr_zero(static_cast<unsigned long>(d)); }

const std::array<Matrix2c, 4> kPauli = [] {
  std::array<Matrix2c, 4> p;
  const cplx i{0.0, 1.0};
  p[0] << 1, 0, 0, 1;
  p[1] << 0, 1, 1, 0;
  p[2] << 0, -i, i, 0;
  p[3] << 1, 0, 0, -1;
  return p;
}();

}  // namespace

const Matrix2c& pauli(int k) {
  if (k < 0 || k > 3) throw std::out_of_range("pauli index must be in 0..3");
  return kPauli[k];
}

Matrix2c bloch_observable(const BlochVector& v) {
  return v.x() * kPauli[1] + v.y() * kPauli[2] + v.z() * kPauli[3];
}

Matrix2c outcome_projector(const BlochVector& n, int a) {
  return 0.5 * (kPauli[0] + static_cast<double>(a) * bloch_observable(n));
}

Matrix2c measurement_basis(const BlochVector& n) {
  // Pick the better-conditioned of the two unnormalized +1 eigenvectors.
  cplx a, b;
  if (n.z() >= 0.0) {
    a = 1.0 + n.z();
    b = cplx(n.x(), n.y());
  } else {
    a = cplx(n.x(), -n.y());
    b = 1.0 - n.z();
  }
  const double nrm = std::sqrt(std::norm(a) + std::norm(b));
  a /= nrm;
  b /= nrm;
  Matrix2c u;
  u << a, -std::conj(b), b, std::conj(a);
  return u;
}

// ---------------------------------------------------------------------------

DensityMatrix::DensityMatrix(CMatrix m, double tol) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || !is_power_of_two(m_.rows()))
    throw std::invalid_argument("density matrix must be square with dimension 2^n");
  if (!m_.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
  if (hermiticity_defect(m_) > tol) throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(m_.trace() - cplx(1.0)) > tol) throw std::invalid_argument("density matrix trace != 1");
  const Eigen::VectorXd ev = hermitian_eigenvalues(m_);
  if (ev(0) < -tol)
    throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(ev(0)));
}

int DensityMatrix::n_qubits() const { return log2_dim(m_.rows()); }

bool DensityMatrix::is_pure(double tol) const {
  return std::abs((m_ * m_).trace().real() - 1.0) <= tol;
}

PureState::PureState(CVector amplitudes) : a_(std::move(amplitudes)) {
  if (!is_power_of_two(a_.size())) throw std::invalid_argument("pure state dimension must be 2^n");
  if (std::abs(a_.norm() - 1.0) > kRoundTripTol) throw std::invalid_argument("pure state is not normalized");
}

PureState PureState::normalized(CVector amplitudes) {
  const double nrm = amplitudes.norm();
  if (nrm == 0.0) throw std::invalid_argument("cannot normalize a zero vector");
  return PureState(amplitudes / nrm);
}

PureState PureState::basis(int n_qubits, int index) {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  if (index < 0 || index >= d) throw std::out_of_range("basis index out of range");
  CVector v = CVector::Zero(d);
  v(index) = 1.0;
  return PureState(std::move(v));
}

int PureState::n_qubits() const { return log2_dim(a_.size()); }

DensityMatrix PureState::density() const { return DensityMatrix(a_ * a_.adjoint()); }

PureState PureState::canonical_phase() const {
  for (Eigen::Index i = 0; i < a_.size(); ++i) {
    if (std::abs(a_(i)) > 1e-12) {
      const cplx phase = std::conj(a_(i)) / std::abs(a_(i));
      return PureState(a_ * phase);
    }
  }
  return *this;
}

// ---------------------------------------------------------------------------

DensityMatrix state_from_bloch(const BlochVector& v) {
  if (!v.allFinite()) throw std::invalid_argument("Bloch vector has non-finite components");
  if (v.norm() > 1.0 + kRoundTripTol) throw std::invalid_argument("Bloch vector outside the unit ball");
  return DensityMatrix(outcome_projector(v, 1));
}

BlochVector bloch_from_state(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw std::invalid_argument("bloch_from_state needs a single-qubit state");
  const CMatrix& m = rho.matrix();
  return {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
}

Eigen::VectorXd hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CMatrix sqrt_psd(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  Eigen::VectorXd s = es.eigenvalues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > kEigenCutoff ? std::sqrt(s(i)) : 0.0;
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const DensityMatrix& tau, const DensityMatrix& rho) {
  if (tau.dim() != rho.dim()) throw std::invalid_argument("fidelity: dimension mismatch");
  const CMatrix s = sqrt_psd(tau.matrix());
  CMatrix inner = s * rho.matrix() * s;
  inner = 0.5 * (inner + inner.adjoint()).eval();
  const Eigen::VectorXd ev = hermitian_eigenvalues(inner);
  double root_trace = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > kEigenCutoff) root_trace += std::sqrt(ev(i));
  return std::clamp(root_trace * root_trace, 0.0, 1.0);
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

CMatrix kron_all(std::span<const Matrix2c> factors) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, CMatrix(f));
  return out;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  return DensityMatrix(kron(a.matrix(), b.matrix()));
}

PureState tensor(const PureState& a, const PureState& b) {
  return PureState::normalized(kron(a.amplitudes(), b.amplitudes()));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  const int n = rho.n_qubits();
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set is empty");
  unsigned keep_mask = 0;
  for (int p : keep) {
    if (p < 0 || p >= n) throw std::invalid_argument("partial_trace: party index out of range");
    const unsigned bit = 1u << (n - 1 - p);
    if (keep_mask & bit) throw std::invalid_argument("partial_trace: duplicated party");
    keep_mask |= bit;
  }
  const int k = static_cast<int>(keep.size());

  // Kept bits are packed in ascending party order, i.e. descending bit order.
  auto pack = [&](unsigned idx) {
    unsigned out = 0;
    for (int b = n - 1; b >= 0; --b)
      if (keep_mask & (1u << b)) out = (out << 1) | ((idx >> b) & 1u);
    return out;
  };

  const unsigned d = 1u << n;
  CMatrix out = CMatrix::Zero(1 << k, 1 << k);
  for (unsigned i = 0; i < d; ++i)
    for (unsigned j = 0; j < d; ++j)
      if ((i & ~keep_mask) == (j & ~keep_mask)) out(pack(i), pack(j)) += rho.matrix()(i, j);
  return DensityMatrix(std::move(out));
}

double concurrence(const PureState& psi) {
  if (psi.dim() != 4) throw std::invalid_argument("concurrence needs a two-qubit pure state");
  const CVector& a = psi.amplitudes();
  return 2.0 * std::abs(a(0) * a(3) - a(1) * a(2));
}

PauliDecomposition pauli_decompose(const DensityMatrix& rho) {
  if (rho.dim() != 4) throw std::invalid_argument("pauli_decompose needs a two-qubit state");
  const CMatrix& m = rho.matrix();
  auto coeff = [&](int i, int j) { return expectation(kron(CMatrix(kPauli[i]), CMatrix(kPauli[j])), m); };
  PauliDecomposition pd;
  for (int i = 0; i < 3; ++i) {
    pd.t1(i) = coeff(i + 1, 0);
    pd.t2(i) = coeff(0, i + 1);
    for (int j = 0; j < 3; ++j) pd.T(i, j) = coeff(i + 1, j + 1);
  }
  return pd;
}

CMatrix PauliDecomposition::reassemble() const {
  auto sig = [](int i) { return CMatrix(kPauli[i]); };
  CMatrix out = kron(sig(0), sig(0));
  for (int i = 0; i < 3; ++i) {
    out += t1(i) * kron(sig(i + 1), sig(0));
    out += t2(i) * kron(sig(0), sig(i + 1));
    for (int j = 0; j < 3; ++j) out += T(i, j) * kron(sig(i + 1), sig(j + 1));
  }
  return 0.25 * out;
}

double trace_distance(const CMatrix& a, const CMatrix& b) {
  const CMatrix diff = a - b;
  return 0.5 * hermitian_eigenvalues(0.5 * (diff + diff.adjoint())).cwiseAbs().sum();
}

double hermiticity_defect(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double expectation(const CMatrix& op, const CMatrix& rho) {
  return (op.cwiseProduct(rho.transpose())).sum().real();
}

}  // namespace misalign
