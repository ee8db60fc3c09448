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
#include <span>
#include <utility>
#include <vector>

#include "misalign/quantum.hpp"

namespace misalign {

enum class PlanMode { Local, Correlated };

/// Maximal tolerated angular deviation on the Bloch sphere, in radians.
struct MisalignmentBudget {
  double epsilon = 0.0;

  /// Throws std::invalid_argument unless 0 <= eps <= pi.
  explicit MisalignmentBudget(double eps);
};

/// Intended and actual measurement directions for every party.
///
/// In local mode party j's k-th setting is measured along actual(j, k)
/// regardless of what the other parties do. In correlated mode the actual
/// direction of party j depends on the whole joint setting tuple
/// (k_0, ..., k_{n-1}); the tuple is flattened with party 0 most significant.
class MeasurementPlan {
 public:
  using DirectionTable = std::vector<std::vector<BlochVector>>;

  /// Local plan; `actual` must have the same shape as `intended`.
  MeasurementPlan(DirectionTable intended, DirectionTable actual);

  /// Plan whose actual directions equal the intended ones.
  static MeasurementPlan ideal(DirectionTable intended);

  /// Correlated plan; actual[j] holds one direction per joint setting tuple.
  static MeasurementPlan correlated(DirectionTable intended, DirectionTable actual_by_joint);

  int n_parties() const { return static_cast<int>(intended_.size()); }
  int n_settings(int party) const { return static_cast<int>(intended_.at(party).size()); }
  int n_joint_settings() const;
  PlanMode mode() const { return mode_; }

  const BlochVector& intended(int party, int k) const { return intended_.at(party).at(k); }

  /// Actual direction of `party` when the joint setting tuple is `joint`.
  const BlochVector& actual(int party, std::span<const int> joint) const;

  /// Actual direction stored at (party, slot): slot is the setting index in
  /// local mode and the flattened joint index in correlated mode.
  const BlochVector& actual_slot(int party, int slot) const { return actual_.at(party).at(slot); }
  int n_actual_slots(int party) const { return static_cast<int>(actual_.at(party).size()); }

  int joint_index(std::span<const int> joint) const;
  std::vector<int> joint_tuple(int index) const;

  const DirectionTable& intended_table() const { return intended_; }
  const DirectionTable& actual_table() const { return actual_; }

  /// Same physics expressed in correlated mode (every joint tuple repeats the
  /// local direction).
  MeasurementPlan to_correlated() const;

  /// Copy with new actual directions of the same shape and mode.
  MeasurementPlan with_actual(DirectionTable actual) const;

 private:
  MeasurementPlan(DirectionTable intended, DirectionTable actual, PlanMode mode);
  void validate() const;

  DirectionTable intended_;
  DirectionTable actual_;
  PlanMode mode_ = PlanMode::Local;
};

/// max over parties, settings (and joint tuples) of acos(m . n).
double max_angular_deviation(const MeasurementPlan& plan);

/// Intended x, y, z (first n_settings of them) for every party; actual = intended.
MeasurementPlan standard_pauli_plan(int n_parties, int n_settings = 3);

using Triad = std::array<BlochVector, 3>;

/// The Pauli triad opened uniformly towards -(1,1,1)/sqrt(3); every direction
/// sits at angle exactly eps from its Pauli axis. Requires 0 <= eps <= pi/2.
Triad tomography_open_triad(double eps);

/// The Pauli triad closed towards +(1,1,1)/sqrt(3) (signs opposite to the
/// open triad). Requires 0 <= eps <= pi/2.
Triad witness_closed_triad(double eps);

/// Pauli intended plan on n parties with the same actual triad on each.
MeasurementPlan triad_plan(int n_parties, const Triad& actual);

enum class Parity { Even, Odd };

/// In-plane GHZ settings cos(k pi/n) sigma_x + sin(k pi/n) sigma_y for
/// k = 1..n followed by sigma_z, as 0-indexed slots 0..n.
std::vector<BlochVector> ghz_intended_settings(int n);

/// GHZ witness plan with in-plane directions rotated by +-eps following the
/// even (pairwise closing, split at the middle party) or odd rule; the
/// sigma_z setting stays unperturbed. Throws when n < 3 or the parity does
/// not match n.
MeasurementPlan ghz_plan(int n, double eps, Parity parity);

/// eps <= pi/(2n): the range in which the GHZ deviation families are known
/// to be worst-case. Outside it ghz_plan still works; callers should warn.
bool ghz_epsilon_in_validated_range(int n, double eps);

/// Deterministic orthonormal tangent pair (e1, e2) at unit vector m, with
/// e2 = m x e1.
std::pair<BlochVector, BlochVector> tangent_frame(const BlochVector& m);

/// Unit vector at polar angle `polar` from m, azimuth measured in tangent_frame(m).
BlochVector deviate(const BlochVector& m, double polar, double azimuth);

/// Inverse of deviate: (polar, azimuth) of unit vector n around m.
std::pair<double, double> deviation_angles(const BlochVector& m, const BlochVector& n);

/// Nearest unit vector to v within angle eps of center. Antipodal input
/// (v parallel to -center) resolves to the tangent_frame(center).first side.
/// Throws std::invalid_argument for v == 0 or a non-unit center.
BlochVector project_to_cone(const BlochVector& v, const BlochVector& center, double eps);

}  // namespace misalign
