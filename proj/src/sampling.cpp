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

#include "misalign/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "misalign/tomography.hpp"

namespace misalign {

BlochVector random_unit_vector(CounterRng& rng) {
  const double z = 1.0 - 2.0 * rng.uniform();
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

DensityMatrix random_qubit_state(CounterRng& rng, double max_norm) {
  if (!(max_norm >= 0.0 && max_norm <= 1.0)) throw std::invalid_argument("Bloch norm limit must lie in [0, 1]");
  const BlochVector dir = random_unit_vector(rng);
  return state_from_bloch(rng.uniform(0.0, max_norm) * dir);
}

PureState random_pure_state(int n_qubits, CounterRng& rng) {
  if (n_qubits < 1 || n_qubits > 24) throw std::invalid_argument("random_pure_state supports 1..24 qubits");
  CVector v(Eigen::Index{1} << n_qubits);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(rng.normal(), rng.normal());
  return PureState::normalized(v);
}

PureState random_product_state(int n_qubits, CounterRng& rng) {
  if (n_qubits < 1) throw std::invalid_argument("random_product_state needs at least one qubit");
  PureState out = random_pure_state(1, rng);
  for (int j = 1; j < n_qubits; ++j) out = tensor(out, random_pure_state(1, rng));
  return out;
}

MeasurementPlan random_misaligned_plan(const MeasurementPlan& intended, double eps, CounterRng& rng) {
  if (intended.mode() != PlanMode::Local) throw std::invalid_argument("random_misaligned_plan expects a local plan");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be non-negative");
  MeasurementPlan::DirectionTable actual = intended.intended_table();
  for (auto& party : actual)
    for (auto& v : party) v = deviate(v, rng.uniform(0.0, eps), rng.uniform(0.0, 2.0 * std::numbers::pi));
  return intended.with_actual(std::move(actual));
}

BoundCheckReport single_qubit_bound_check(const std::vector<double>& eps, int trials_per_epsilon, std::uint64_t seed,
                                          double tol) {
  if (eps.empty() || trials_per_epsilon < 1) throw std::invalid_argument("bound check needs a grid and trials");
  BoundCheckReport report;
  report.trials_per_epsilon = trials_per_epsilon;
  report.eps = eps;
  report.min_margin = std::numeric_limits<double>::infinity();
  const MeasurementPlan pauli = standard_pauli_plan(1);
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const double floor = worst_case_fidelity_single(eps[e]).value;
    CounterRng rng(seed, e);
    for (int t = 0; t < trials_per_epsilon; ++t) {
      const DensityMatrix tau = random_qubit_state(rng);
      const MeasurementPlan plan = random_misaligned_plan(pauli, eps[e], rng);
      const ReconstructionResult r = mle_reconstruct(simulate_statistics(tau, plan), pauli);
      const double margin = fidelity(tau, r.rho) - floor;
      report.min_margin = std::min(report.min_margin, margin);
      if (margin < -tol) ++report.violations;
    }
  }
  return report;
}

}  // namespace misalign
