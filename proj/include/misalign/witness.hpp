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

#include <stdexcept>
#include <string>
#include <vector>

#include "misalign/misalignment.hpp"
#include "misalign/quantum.hpp"
#include "misalign/tomography.hpp"

namespace misalign {

/// coeff * (n_{k_0} . sigma) (x) ... (x) (n_{k_{n-1}} . sigma)
struct WitnessTerm {
  double coeff = 0.0;
  std::vector<int> settings;
};

/// coeff * (x)_j (1 + a_j n_{k_j} . sigma) / 2, a_j = +-1
struct ProjectorTerm {
  double coeff = 0.0;
  std::vector<int> settings;
  std::vector<int> outcomes;
};

/// A Hermitian observable together with the local-measurement decomposition
/// used to evaluate it. Deformations act on the decomposition, so two specs
/// with the same matrix but different decompositions are different witnesses.
class WitnessSpec {
 public:
  /// Builds the observable from the decomposition evaluated at the intended
  /// directions. Throws std::invalid_argument on malformed terms (wrong
  /// length, setting index out of range, outcome not +-1).
  WitnessSpec(MeasurementPlan::DirectionTable intended, std::vector<WitnessTerm> terms,
              std::vector<ProjectorTerm> projector_terms, double identity_coeff);

  int n_parties() const { return static_cast<int>(intended_.size()); }
  const CMatrix& observable() const { return w_; }
  const MeasurementPlan::DirectionTable& intended() const { return intended_; }
  const std::vector<WitnessTerm>& terms() const { return terms_; }
  const std::vector<ProjectorTerm>& projector_terms() const { return projector_terms_; }
  double identity_coeff() const { return identity_coeff_; }

  /// Plan with actual = intended for this witness's settings.
  MeasurementPlan ideal_plan() const { return MeasurementPlan::ideal(intended_); }

  /// tr(W rho) for the undeformed observable.
  double value(const CMatrix& rho) const;

 private:
  MeasurementPlan::DirectionTable intended_;
  std::vector<WitnessTerm> terms_;
  std::vector<ProjectorTerm> projector_terms_;
  double identity_coeff_ = 0.0;
  CMatrix w_;
};

/// Raised for witness families without a known closed-form correction.
class NoClosedForm : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// 1/2 1 - |Psi-><Psi-| measured as 1/4 + 1/4 sum_k sigma_k (x) sigma_k.
WitnessSpec singlet_witness();

/// 1/2 1 - |GHZ><GHZ| measured with the in-plane settings k pi/n and
/// sigma_z (slot n). Throws for n < 3 or n > 12.
WitnessSpec ghz_witness(int n);

/// The observable obtained when the decomposition is measured along the
/// plan's actual directions. In correlated mode each term uses the actual
/// directions of its own joint setting tuple. Throws std::invalid_argument
/// when the plan's intended settings differ from the spec's.
CMatrix effective_witness(const WitnessSpec& spec, const MeasurementPlan& plan);

/// <psi| W^eps |psi> without forming the 2^n x 2^n observable.
double effective_value(const WitnessSpec& spec, const MeasurementPlan& plan, const CVector& psi);

/// (cos 2eps - 2 sqrt2 sin 2eps - 1) / 8. Throws unless 0 <= eps < pi/2.
double singlet_correction_closed_form(double eps);

/// -sin(n eps)/4 for even n >= 4; the odd-n expression for n >= 5. The flag
/// reports eps <= pi/(2n). Throws NoClosedForm for n = 3 and
/// std::invalid_argument for n < 3.
BoundValue ghz_correction_closed_form(int n, double eps);

/// W - w 1. Throws std::invalid_argument for w > 0.
WitnessSpec shift_witness(const WitnessSpec& spec, double w);

/// The separable singlet-witness fixture: a product of two pure qubit states
/// with cos^2(chi) (|0> + e^{i pi/4} tan(chi) |1>) (tan(chi) |0> + e^{-3i pi/4} |1>),
/// chi = acos(1/sqrt3)/2. Pair it with triad_plan(2, witness_closed_triad(eps)).
PureState singlet_fixture_state();

/// Biseparable GHZ fixture: for even n the product of two n/2-qubit
/// GHZ-like states with relative phases +-pi/4; for odd n the product of
/// n_- = (n-1)/2 and n_+ = (n+1)/2 qubit GHZ-like states. Pair it with
/// ghz_plan(n, eps, parity). Throws for n < 4 or a parity mismatch.
PureState biseparable_fixture(int n, Parity parity);

}  // namespace misalign
