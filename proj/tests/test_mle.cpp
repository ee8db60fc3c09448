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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "misalign/rng.hpp"
#include "misalign/sampling.hpp"
#include "misalign/tomography.hpp"
#include "misalign/worstcase.hpp"
#include "oracles.hpp"

using namespace misalign;
using doctest::Approx;
using oracle::deg;

namespace {

DensityMatrix plus_s() { return PureState(psi_s(+1)).density(); }

void check_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(trace[i - 1]) + 1.0);
    CHECK(trace[i] >= trace[i - 1] - slack);
  }
}

DensityMatrix product_of_marginals(const DensityMatrix& rho, int n) {
  const int first[] = {0};
  DensityMatrix out = partial_trace(rho, first);
  for (int j = 1; j < n; ++j) {
    const int keep[] = {j};
    out = tensor(out, partial_trace(rho, keep));
  }
  return out;
}

}  // namespace

TEST_CASE("exact data: the maximizer is the true state") {
  CounterRng rng(21, 0);
  for (int n = 1; n <= 2; ++n)
    for (int i = 0; i < 10; ++i) {
      const DensityMatrix tau = i % 2 ? random_pure_state(n, rng).density()
                                      : DensityMatrix(0.7 * random_pure_state(n, rng).density().matrix() +
                                                      0.3 * CMatrix::Identity(1 << n, 1 << n) / double(1 << n));
      const ReconstructionResult r = mle_reconstruct(simulate_statistics(tau, standard_pauli_plan(n)), standard_pauli_plan(n));
      CHECK(r.converged);
      CHECK(trace_distance(r.rho.matrix(), tau.matrix()) < 1e-7);
    }
}

TEST_CASE("outside the sphere the maximizer is pure") {
  for (double e : {deg(72), deg(80), deg(89)}) {
    const OutcomeStatistics st = simulate_statistics(plus_s(), triad_plan(1, tomography_open_triad(e)));
    REQUIRE(st.correlators().norm() > 1.0);
    const ReconstructionResult r = mle_reconstruct(st, standard_pauli_plan(1));
    CHECK(r.converged);
    CHECK(r.residual <= 1e-9);
    CHECK(bloch_from_state(r.rho).norm() == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("agrees with physical linear inversion") {
  CounterRng rng(22, 0);
  for (int i = 0; i < 20; ++i) {
    const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(2), deg(2), rng);
    const DensityMatrix tau = DensityMatrix(0.8 * random_pure_state(2, rng).density().matrix() + 0.05 * CMatrix::Identity(4, 4));
    const OutcomeStatistics st = simulate_statistics(tau, plan);
    const ReconstructionResult li = linear_inversion(st, standard_pauli_plan(2), {.mle_fallback = true});
    if (!li.linear_inversion_physical) continue;
    const ReconstructionResult ml = mle_reconstruct(st, standard_pauli_plan(2));
    CHECK(fidelity(ml.rho, li.rho) >= 1.0 - 1e-8);
  }
}

TEST_CASE("likelihood trace is monotone and the residual is met") {
  CounterRng rng(23, 0);
  for (int i = 0; i < 30; ++i) {
    const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(2), deg(5), rng);
    const OutcomeStatistics st = simulate_statistics(random_pure_state(2, rng).density(), plan);
    MleOptions o;
    o.record_likelihood = true;
    const ReconstructionResult r = mle_reconstruct(st, standard_pauli_plan(2), o);
    REQUIRE(r.likelihood_trace.size() >= 1);
    check_monotone(r.likelihood_trace);
    if (r.converged) {
      CHECK(r.residual <= 1e-9);
      CHECK(mle_fixed_point_residual(st, standard_pauli_plan(2), r.rho) == Approx(r.residual).epsilon(1e-6));
    }
    CHECK(r.residual >= 0.0);
    CHECK(log_likelihood(st, standard_pauli_plan(2), r.rho.matrix()) == Approx(r.likelihood_trace.back()).epsilon(1e-12));
  }
}

TEST_CASE("without the factor polish the plain iteration reaches the same maximizer") {
  CounterRng rng(24, 0);
  const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(2), deg(3), rng);
  const OutcomeStatistics st = simulate_statistics(random_pure_state(2, rng).density(), plan);
  MleOptions plain;
  plain.polish = false;
  plain.tol = 1e-8;
  plain.record_likelihood = true;
  const ReconstructionResult a = mle_reconstruct(st, standard_pauli_plan(2), plain);
  const ReconstructionResult b = mle_reconstruct(st, standard_pauli_plan(2));
  check_monotone(a.likelihood_trace);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(b.iterations <= a.iterations);
  CHECK(trace_distance(a.rho.matrix(), b.rho.matrix()) < 1e-5);
}

TEST_CASE("iteration cap flags non-convergence") {
  CounterRng rng(25, 0);
  const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(2), deg(5), rng);
  const OutcomeStatistics st = simulate_statistics(random_pure_state(2, rng).density(), plan);
  MleOptions o;
  o.max_iter = 1;
  o.polish = false;
  o.tol = 1e-15;
  const ReconstructionResult r = mle_reconstruct(st, standard_pauli_plan(2), o);
  CHECK_FALSE(r.converged);
  CHECK(r.residual > 1e-15);
}

TEST_CASE("products stay products") {
  CounterRng rng(26, 0);
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 2;
    const DensityMatrix tau = tensor(random_qubit_state(rng), n == 2 ? random_qubit_state(rng)
                                                                       : tensor(random_qubit_state(rng), random_qubit_state(rng)));
    const MeasurementPlan plan = random_misaligned_plan(standard_pauli_plan(n), deg(30), rng);
    const ReconstructionResult r = reconstruct(simulate_statistics(tau, plan), standard_pauli_plan(n));
    CHECK(fidelity(r.rho, product_of_marginals(r.rho, n)) >= 1.0 - 1e-7);
  }
}

TEST_CASE("outcome vectors stay in the lambda ball and the boundary maximizer stays in its cap") {
  CounterRng rng(27, 0);
  const MeasurementPlan pauli = standard_pauli_plan(1);
  int outside = 0;
  double worst_ball = -1.0, worst_cap = -1.0;
  for (int i = 0; i < 4000; ++i) {
    const double eps = deg(rng.uniform(1.0, 30.0));
    const double lambda = lambda_ball_radius(eps);
    const BlochVector t = rng.uniform(0.85, 1.0) * random_unit_vector(rng);
    const OutcomeStatistics st = simulate_statistics(state_from_bloch(t), random_misaligned_plan(pauli, eps, rng));
    const BlochVector c = st.correlators();
    worst_ball = std::max(worst_ball, (c - t).norm() - t.norm() * lambda);
    if (c.norm() <= 1.0) continue;
    ++outside;
    const BlochVector r = bloch_from_state(mle_reconstruct(st, pauli).rho);
    CHECK(r.norm() == Approx(1.0).epsilon(1e-6));
    worst_cap = std::max(worst_cap, (1.0 - t.norm() * lambda) / t.norm() - r.dot(t.normalized()));
  }
  CHECK(outside > 500);
  CHECK(worst_ball <= 1e-12);
  CHECK(worst_cap <= 1e-6);
}

TEST_CASE("party mismatch is rejected") {
  const OutcomeStatistics st = simulate_statistics(plus_s(), standard_pauli_plan(1));
  CHECK_THROWS_AS(mle_reconstruct(st, standard_pauli_plan(2)), std::invalid_argument);
}
