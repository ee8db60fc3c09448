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

#include "misalign/misalignment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

namespace misalign {

namespace {

constexpr double kPi = std::numbers::pi;

void require_unit(const BlochVector& v, const char* what) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kRoundTripTol)
    throw std::invalid_argument(std::string(what) + ": direction is not a unit vector");
}

double angle_between(const BlochVector& a, const BlochVector& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

void require_triad_range(double eps) {
  if (!(eps >= 0.0 && eps <= kPi / 2)) throw std::invalid_argument("triad families need 0 <= eps <= pi/2");
}

}  // namespace

MisalignmentBudget::MisalignmentBudget(double eps) : epsilon(eps) {
  if (!(eps >= 0.0 && eps <= kPi)) throw std::invalid_argument("misalignment budget must lie in [0, pi]");
}

// ---------------------------------------------------------------------------

MeasurementPlan::MeasurementPlan(DirectionTable intended, DirectionTable actual)
    : MeasurementPlan(std::move(intended), std::move(actual), PlanMode::Local) {}

MeasurementPlan::MeasurementPlan(DirectionTable intended, DirectionTable actual, PlanMode mode)
    : intended_(std::move(intended)), actual_(std::move(actual)), mode_(mode) {
  validate();
}

MeasurementPlan MeasurementPlan::ideal(DirectionTable intended) {
  DirectionTable actual = intended;
  return MeasurementPlan(std::move(intended), std::move(actual), PlanMode::Local);
}

MeasurementPlan MeasurementPlan::correlated(DirectionTable intended, DirectionTable actual_by_joint) {
  return MeasurementPlan(std::move(intended), std::move(actual_by_joint), PlanMode::Correlated);
}

void MeasurementPlan::validate() const {
  if (intended_.empty()) throw std::invalid_argument("plan needs at least one party");
  if (actual_.size() != intended_.size()) throw std::invalid_argument("plan: intended/actual party count mismatch");
  for (const auto& party : intended_) {
    if (party.empty()) throw std::invalid_argument("plan: every party needs at least one setting");
    for (const auto& v : party) require_unit(v, "intended");
  }
  if (mode_ == PlanMode::Correlated && n_parties() > 8)
    throw std::invalid_argument("correlated plans support at most 8 parties");
  const int joint = mode_ == PlanMode::Correlated ? n_joint_settings() : 0;
  for (int j = 0; j < n_parties(); ++j) {
    const std::size_t expected = mode_ == PlanMode::Local ? intended_[j].size() : static_cast<std::size_t>(joint);
    if (actual_[j].size() != expected) throw std::invalid_argument("plan: actual directions have the wrong shape");
    for (const auto& v : actual_[j]) require_unit(v, "actual");
  }
}

int MeasurementPlan::n_joint_settings() const {
  long count = 1;
  for (const auto& party : intended_) {
    count *= static_cast<long>(party.size());
    if (count > (1L << 24)) throw std::invalid_argument("plan: too many joint settings");
  }
  return static_cast<int>(count);
}

int MeasurementPlan::joint_index(std::span<const int> joint) const {
  if (static_cast<int>(joint.size()) != n_parties()) throw std::invalid_argument("joint tuple has wrong length");
  int idx = 0;
  for (int j = 0; j < n_parties(); ++j) {
    if (joint[j] < 0 || joint[j] >= n_settings(j)) throw std::out_of_range("joint tuple entry out of range");
    idx = idx * n_settings(j) + joint[j];
  }
  return idx;
}

std::vector<int> MeasurementPlan::joint_tuple(int index) const {
  std::vector<int> out(n_parties());
  for (int j = n_parties() - 1; j >= 0; --j) {
    out[j] = index % n_settings(j);
    index /= n_settings(j);
  }
  return out;
}

const BlochVector& MeasurementPlan::actual(int party, std::span<const int> joint) const {
  if (mode_ == PlanMode::Local) return actual_.at(party).at(joint[party]);
  return actual_.at(party).at(joint_index(joint));
}

MeasurementPlan MeasurementPlan::to_correlated() const {
  if (mode_ == PlanMode::Correlated) return *this;
  const int joint = n_joint_settings();
  DirectionTable expanded(n_parties());
  for (int j = 0; j < n_parties(); ++j) {
    expanded[j].reserve(joint);
    for (int idx = 0; idx < joint; ++idx) expanded[j].push_back(actual_[j][joint_tuple(idx)[j]]);
  }
  return correlated(intended_, std::move(expanded));
}

MeasurementPlan MeasurementPlan::with_actual(DirectionTable actual) const {
  return MeasurementPlan(intended_, std::move(actual), mode_);
}

// ---------------------------------------------------------------------------

double max_angular_deviation(const MeasurementPlan& plan) {
  double worst = 0.0;
  for (int j = 0; j < plan.n_parties(); ++j) {
    for (int slot = 0; slot < plan.n_actual_slots(j); ++slot) {
      const int k = plan.mode() == PlanMode::Local ? slot : plan.joint_tuple(slot)[j];
      worst = std::max(worst, angle_between(plan.intended(j, k), plan.actual_slot(j, slot)));
    }
  }
  return worst;
}

MeasurementPlan standard_pauli_plan(int n_parties, int n_settings) {
  if (n_parties < 1) throw std::invalid_argument("standard_pauli_plan needs n >= 1");
  if (n_settings < 1 || n_settings > 3) throw std::invalid_argument("standard_pauli_plan has 1..3 settings");
  std::vector<BlochVector> axes;
  for (int k = 0; k < n_settings; ++k) axes.push_back(BlochVector::Unit(k));
  return MeasurementPlan::ideal(MeasurementPlan::DirectionTable(n_parties, axes));
}

namespace {

Triad symmetric_triad(double eps, double sign) {
  require_triad_range(eps);
  const double c = std::cos(eps);
  const double o = sign * std::sin(eps) / std::numbers::sqrt2;
  return {BlochVector(c, o, o), BlochVector(o, c, o), BlochVector(o, o, c)};
}

}  // namespace

Triad tomography_open_triad(double eps) { return symmetric_triad(eps, -1.0); }

Triad witness_closed_triad(double eps) { return symmetric_triad(eps, +1.0); }

MeasurementPlan triad_plan(int n_parties, const Triad& actual) {
  MeasurementPlan base = standard_pauli_plan(n_parties);
  return base.with_actual(
      MeasurementPlan::DirectionTable(n_parties, std::vector<BlochVector>(actual.begin(), actual.end())));
}

std::vector<BlochVector> ghz_intended_settings(int n) {
  if (n < 3) throw std::invalid_argument("GHZ settings need n >= 3");
  std::vector<BlochVector> out;
  for (int k = 1; k <= n; ++k) {
    const double phi = k * kPi / n;
    out.emplace_back(std::cos(phi), std::sin(phi), 0.0);
  }
  out.push_back(BlochVector::UnitZ());
  return out;
}

MeasurementPlan ghz_plan(int n, double eps, Parity parity) {
  if (n < 3) throw std::invalid_argument("ghz_plan needs n >= 3");
  if ((parity == Parity::Even) != (n % 2 == 0)) throw std::invalid_argument("ghz_plan: parity does not match n");
  if (!(eps >= 0.0 && eps <= kPi)) throw std::invalid_argument("ghz_plan: eps must lie in [0, pi]");

  const auto intended = ghz_intended_settings(n);
  const int n_plus = (n + 1) / 2;
  const int n_minus = (n - 1) / 2;
  const double nu = (n_minus % 2 == 0) ? 1.0 : -1.0;

  MeasurementPlan::DirectionTable actual(n, intended);
  // Party j and setting k are 1-based here.
  for (int j = 1; j <= n; ++j) {
    for (int k = 1; k <= n; ++k) {
      const double alt = (k % 2 == 0) ? 1.0 : -1.0;
      double g = 0.0;
      if (parity == Parity::Even) {
        g = (2 * j <= n) ? alt : -alt;
      } else {
        const double a = static_cast<double>(k - n_plus) * (static_cast<double>(j) - n / 2.0);
        g = nu * alt * static_cast<double>((a > 0) - (a < 0));
      }
      const double phi = k * kPi / n + g * eps;
      actual[j - 1][k - 1] = BlochVector(std::cos(phi), std::sin(phi), 0.0);
    }
  }
  return MeasurementPlan(MeasurementPlan::DirectionTable(n, intended), std::move(actual));
}

bool ghz_epsilon_in_validated_range(int n, double eps) { return eps <= kPi / (2.0 * n) + 1e-15; }

std::pair<BlochVector, BlochVector> tangent_frame(const BlochVector& m) {
  int least = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(m(i)) < std::abs(m(least))) least = i;
  const BlochVector e1 = BlochVector::Unit(least).cross(m).normalized();
  return {e1, m.cross(e1)};
}

BlochVector deviate(const BlochVector& m, double polar, double azimuth) {
  const auto [e1, e2] = tangent_frame(m);
  const BlochVector v = std::cos(polar) * m + std::sin(polar) * (std::cos(azimuth) * e1 + std::sin(azimuth) * e2);
  return v.normalized();
}

std::pair<double, double> deviation_angles(const BlochVector& m, const BlochVector& n) {
  const auto [e1, e2] = tangent_frame(m);
  return {angle_between(m, n), std::atan2(n.dot(e2), n.dot(e1))};
}

BlochVector project_to_cone(const BlochVector& v, const BlochVector& center, double eps) {
  require_unit(center, "project_to_cone center");
  const double nrm = v.norm();
  if (!(nrm > 0.0)) throw std::invalid_argument("project_to_cone: zero vector");
  const BlochVector u = v / nrm;
  if (angle_between(u, center) <= eps) return u;
  BlochVector tangent = u - u.dot(center) * center;
  if (tangent.norm() < 1e-12) tangent = tangent_frame(center).first;
  tangent.normalize();
  return (std::cos(eps) * center + std::sin(eps) * tangent).normalized();
}

}  // namespace misalign
