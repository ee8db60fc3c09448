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

#include "misalign/witness.hpp"

#include <cmath>
#include <numbers>

#include "local_ops.hpp"

namespace misalign {

namespace {

constexpr double kPi = std::numbers::pi;

void check_settings(const MeasurementPlan::DirectionTable& intended, const std::vector<int>& settings) {
  if (settings.size() != intended.size()) throw std::invalid_argument("witness term has the wrong number of parties");
  for (std::size_t j = 0; j < settings.size(); ++j)
    if (settings[j] < 0 || settings[j] >= static_cast<int>(intended[j].size()))
      throw std::invalid_argument("witness term refers to a missing setting");
}

/// Direction measured by `party` for a term whose joint setting tuple is `settings`.
const BlochVector& term_direction(const MeasurementPlan& plan, int party, const std::vector<int>& settings) {
  return plan.actual(party, settings);
}

CMatrix assemble(const WitnessSpec& spec, const MeasurementPlan& plan) {
  const int n = spec.n_parties();
  const Eigen::Index d = Eigen::Index{1} << n;
  CMatrix w = spec.identity_coeff() * CMatrix::Identity(d, d);
  std::vector<Matrix2c> factors(n);
  for (const auto& t : spec.terms()) {
    for (int j = 0; j < n; ++j) factors[j] = bloch_observable(term_direction(plan, j, t.settings));
    w += t.coeff * kron_all(factors);
  }
  for (const auto& t : spec.projector_terms()) {
    for (int j = 0; j < n; ++j) factors[j] = outcome_projector(term_direction(plan, j, t.settings), t.outcomes[j]);
    w += t.coeff * kron_all(factors);
  }
  return 0.5 * (w + w.adjoint());
}

void require_compatible(const WitnessSpec& spec, const MeasurementPlan& plan) {
  if (plan.n_parties() != spec.n_parties()) throw std::invalid_argument("witness and plan differ in party count");
  for (int j = 0; j < spec.n_parties(); ++j) {
    if (plan.n_settings(j) != static_cast<int>(spec.intended()[j].size()))
      throw std::invalid_argument("witness and plan differ in setting count");
    for (int k = 0; k < plan.n_settings(j); ++k)
      if ((plan.intended(j, k) - spec.intended()[j][k]).norm() > 1e-12)
        throw std::invalid_argument("plan's intended settings do not match the witness decomposition");
  }
}

CVector ghz_like(int qubits, cplx phase) {
  CVector v = CVector::Zero(Eigen::Index{1} << qubits);
  v(0) = 1.0 / std::numbers::sqrt2;
  v(v.size() - 1) = phase / std::numbers::sqrt2;
  return v;
}

}  // namespace

WitnessSpec::WitnessSpec(MeasurementPlan::DirectionTable intended, std::vector<WitnessTerm> terms,
                         std::vector<ProjectorTerm> projector_terms, double identity_coeff)
    : intended_(std::move(intended)),
      terms_(std::move(terms)),
      projector_terms_(std::move(projector_terms)),
      identity_coeff_(identity_coeff) {
  if (intended_.empty() || intended_.size() > 12) throw std::invalid_argument("witness needs 1..12 parties");
  for (const auto& t : terms_) check_settings(intended_, t.settings);
  for (const auto& t : projector_terms_) {
    check_settings(intended_, t.settings);
    if (t.outcomes.size() != intended_.size()) throw std::invalid_argument("projector term has the wrong outcome count");
    for (int a : t.outcomes)
      if (a != 1 && a != -1) throw std::invalid_argument("projector outcomes must be +1 or -1");
  }
  if (!std::isfinite(identity_coeff_)) throw std::invalid_argument("identity coefficient must be finite");
  w_ = assemble(*this, ideal_plan());
}

double WitnessSpec::value(const CMatrix& rho) const { return expectation(w_, rho); }

WitnessSpec singlet_witness() {
  std::vector<BlochVector> axes = {BlochVector::UnitX(), BlochVector::UnitY(), BlochVector::UnitZ()};
  std::vector<WitnessTerm> terms;
  for (int k = 0; k < 3; ++k) terms.push_back({0.25, {k, k}});
  return WitnessSpec(MeasurementPlan::DirectionTable(2, axes), std::move(terms), {}, 0.25);
}

WitnessSpec ghz_witness(int n) {
  if (n < 3 || n > 12) throw std::invalid_argument("ghz_witness supports 3 <= n <= 12");
  const auto axes = ghz_intended_settings(n);
  std::vector<WitnessTerm> terms;
  for (int k = 1; k <= n; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    terms.push_back({-0.5 * sign / n, std::vector<int>(n, k - 1)});
  }
  std::vector<ProjectorTerm> projectors;
  for (int l : {1, -1}) projectors.push_back({-0.5, std::vector<int>(n, n), std::vector<int>(n, l)});
  return WitnessSpec(MeasurementPlan::DirectionTable(n, axes), std::move(terms), std::move(projectors), 0.5);
}

CMatrix effective_witness(const WitnessSpec& spec, const MeasurementPlan& plan) {
  require_compatible(spec, plan);
  return assemble(spec, plan);
}

double effective_value(const WitnessSpec& spec, const MeasurementPlan& plan, const CVector& psi) {
  require_compatible(spec, plan);
  const int n = spec.n_parties();
  if (psi.size() != (Eigen::Index{1} << n)) throw std::invalid_argument("effective_value: state dimension mismatch");
  double acc = spec.identity_coeff() * psi.squaredNorm();
  CVector work;
  for (const auto& t : spec.terms()) {
    work = psi;
    for (int j = 0; j < n; ++j) detail::apply_local(work, n, j, bloch_observable(term_direction(plan, j, t.settings)));
    acc += t.coeff * psi.dot(work).real();
  }
  for (const auto& t : spec.projector_terms()) {
    work = psi;
    for (int j = 0; j < n; ++j)
      detail::apply_local(work, n, j, outcome_projector(term_direction(plan, j, t.settings), t.outcomes[j]));
    acc += t.coeff * psi.dot(work).real();
  }
  return acc;
}

double singlet_correction_closed_form(double eps) {
  if (!(eps >= 0.0 && eps < kPi / 2)) throw std::invalid_argument("singlet correction needs 0 <= eps < pi/2");
  return (std::cos(2 * eps) - 2 * std::numbers::sqrt2 * std::sin(2 * eps) - 1.0) / 8.0;
}

BoundValue ghz_correction_closed_form(int n, double eps) {
  if (n < 3) throw std::invalid_argument("GHZ witness needs n >= 3");
  if (n == 3) throw NoClosedForm("the n = 3 GHZ correction has no closed form; use the optimizer");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  const bool validated = ghz_epsilon_in_validated_range(n, eps);
  if (n % 2 == 0) return {-0.25 * std::sin(n * eps), validated};
  const double value = (n - 2 - (n - 1) * std::cos(eps) + std::cos(n * eps) - std::sin(n * eps) / std::tan(kPi / (2 * n))) /
                       (4.0 * n);
  return {value, validated};
}

WitnessSpec shift_witness(const WitnessSpec& spec, double w) {
  if (!(w <= 0.0)) throw std::invalid_argument("witness shift must be non-positive");
  return WitnessSpec(spec.intended(), spec.terms(), spec.projector_terms(), spec.identity_coeff() - w);
}

PureState singlet_fixture_state() {
  const double chi = std::acos(1.0 / std::sqrt(3.0)) / 2.0;
  const double t = std::tan(chi);
  const cplx i{0.0, 1.0};
  CVector a(2), b(2);
  a << 1.0, std::exp(i * (kPi / 4)) * t;
  b << t, std::exp(-i * (3 * kPi / 4));
  const double c2 = std::cos(chi) * std::cos(chi);
  return PureState::normalized(c2 * kron(a, b));
}

PureState biseparable_fixture(int n, Parity parity) {
  if ((parity == Parity::Even) != (n % 2 == 0)) throw std::invalid_argument("biseparable_fixture: parity mismatch");
  if (n < 4) throw std::invalid_argument("biseparable_fixture needs n >= 4");
  const cplx i{0.0, 1.0};
  if (parity == Parity::Even) {
    return PureState::normalized(kron(ghz_like(n / 2, std::exp(i * (kPi / 4))), ghz_like(n / 2, std::exp(-i * (kPi / 4)))));
  }
  const int n_minus = (n - 1) / 2;
  const int n_plus = (n + 1) / 2;
  const double nu = (n_minus % 2 == 0) ? 1.0 : -1.0;
  const double phase = nu * (3.0 * n + nu) * kPi / (4.0 * n);
  return PureState::normalized(kron(ghz_like(n_minus, std::exp(-i * phase)), ghz_like(n_plus, std::exp(i * phase))));
}

}  // namespace misalign
