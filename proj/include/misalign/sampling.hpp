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

#include <cstdint>
#include <vector>

#include "misalign/misalignment.hpp"
#include "misalign/quantum.hpp"
#include "misalign/rng.hpp"

namespace misalign {

/// Uniform on the unit sphere.
BlochVector random_unit_vector(CounterRng& rng);

/// Qubit state with a uniformly random Bloch direction and a Bloch norm
/// drawn uniformly from [0, max_norm].
DensityMatrix random_qubit_state(CounterRng& rng, double max_norm = 1.0);

/// Haar-random pure state on n qubits.
PureState random_pure_state(int n_qubits, CounterRng& rng);

/// Tensor product of n Haar-random single-qubit pure states.
PureState random_product_state(int n_qubits, CounterRng& rng);

/// Local plan whose actual directions deviate from the intended ones by a
/// polar angle uniform in [0, eps] and a uniform azimuth.
MeasurementPlan random_misaligned_plan(const MeasurementPlan& intended, double eps, CounterRng& rng);

struct BoundCheckReport {
  int trials_per_epsilon = 0;
  std::vector<double> eps;
  long violations = 0;
  /// min over all trials of F(tau, reconstruction) - f(eps).
  double min_margin = 0.0;
};

/// Samples random mixed qubit states and misaligned Pauli frames, runs the
/// maximum-likelihood reconstruction and counts fidelities below
/// f(eps) - tol.
BoundCheckReport single_qubit_bound_check(const std::vector<double>& eps, int trials_per_epsilon, std::uint64_t seed,
                                          double tol = 1e-6);

}  // namespace misalign
