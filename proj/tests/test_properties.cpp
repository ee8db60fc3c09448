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

// Search-level invariants: larger budgets never help the state, fixtures
// bound the result, runs repeat bit for bit, gradients agree with finite
// differences, correlated deviations dominate local ones.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "misalign/rng.hpp"
#include "misalign/sampling.hpp"
#include "misalign/serialization.hpp"
#include "misalign/worstcase.hpp"
#include "oracles.hpp"

using namespace misalign;
using doctest::Approx;
using oracle::deg;

namespace {

OptimizerOptions opts(int restarts, std::uint64_t seed, Execution ex = Execution::Parallel) {
  OptimizerOptions o;
  o.restarts = restarts;
  o.seed = seed;
  o.execution = ex;
  return o;
}

double fixture_fidelity(double eps, double alpha) {
  const FidelityProblem p(eps, alpha, PlanMode::Local);
  const FixtureKind kind = alpha < 0.5 ? FixtureKind::LowAlpha : FixtureKind::HighAlpha;
  const Fixture f = appendix_fixture(kind, {.eps = eps, .alpha = alpha});
  return p.objective(p.encode(f.state, {f.plus_vectors[0], f.plus_vectors[1]}, f.plan));
}

}  // namespace

TEST_CASE("larger budget never raises the worst case") {
  for (double alpha : {0.0, 0.3}) {
    double previous = 1.0;
    for (double e : {deg(0.25), deg(0.5), deg(1.0)}) {
      const double v = minimize_fidelity(e, alpha, opts(4, 17)).best_value;
      CHECK(v <= previous + 1e-5);
      previous = v;
    }
  }
  for (const WitnessSpec& w : {singlet_witness(), ghz_witness(3)}) {
    const std::vector<CorrectionRow> rows = correction_curve(w, {deg(1), deg(2), deg(3)}, PlanMode::Local, opts(4, 17));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].optimized <= rows[i - 1].optimized + 1e-5);
  }
}

TEST_CASE("fixtures bound the search result") {
  for (double alpha : {0.0, 0.2, 0.7}) {
    const double e = deg(1);
    CHECK(minimize_fidelity(e, alpha, opts(3, 5)).best_value <= fixture_fidelity(e, alpha) + 1e-8);
  }
  for (int n : {4, 5}) {
    const double e = deg(2);
    const OptimizationResult r = minimize_witness(ghz_witness(n), e, PlanMode::Local, opts(2, 5));
    CHECK(r.best_value <= ghz_correction_closed_form(n, e).value + 1e-8);
  }
  const OptimizationResult s = minimize_witness(singlet_witness(), deg(6), PlanMode::Local, opts(1, 5));
  CHECK(s.best_value <= singlet_correction_closed_form(deg(6)) + 1e-8);
}

TEST_CASE("identical seeds give identical results") {
  const auto a = optimization_to_json(minimize_fidelity(deg(1), 0.4, opts(4, 99))).dump();
  const auto b = optimization_to_json(minimize_fidelity(deg(1), 0.4, opts(4, 99))).dump();
  CHECK(a == b);
  const auto c = optimization_to_json(minimize_fidelity(deg(1), 0.4, opts(4, 99, Execution::Serial))).dump();
  CHECK(a == c);
  const auto w1 = optimization_to_json(minimize_witness(ghz_witness(3), deg(3), PlanMode::Local, opts(5, 4))).dump();
  const auto w2 = optimization_to_json(minimize_witness(ghz_witness(3), deg(3), PlanMode::Local, opts(5, 4, Execution::Serial))).dump();
  CHECK(w1 == w2);
  const auto other = optimization_to_json(minimize_fidelity(deg(1), 0.4, opts(4, 100))).dump();
  CHECK(other != a);
}

TEST_CASE("analytic witness gradients agree with central differences") {
  CounterRng rng(61, 0);
  struct Case {
    WitnessSpec spec;
    PlanMode mode;
    unsigned mask;
    bool deform;
  };
  const std::vector<Case> cases{{singlet_witness(), PlanMode::Local, 1u, false},
                                {ghz_witness(3), PlanMode::Local, 1u, false},
                                {ghz_witness(4), PlanMode::Local, 5u, true},
                                {ghz_witness(3), PlanMode::Correlated, 2u, false},
                                {singlet_witness(), PlanMode::Correlated, 1u, false}};
  int points = 0;
  double worst = 0.0;
  for (const Case& c : cases) {
    const WitnessProblem p(c.spec, deg(5), c.mode, c.mask, c.deform);
    const Objective f = [&](const Eigen::VectorXd& x) { return p.objective(x); };
    for (int i = 0; i < 20; ++i, ++points) {
      const Eigen::VectorXd x = p.random_start(rng);
      Eigen::VectorXd g;
      const double v = p.objective(x, g);
      CHECK(v == Approx(p.objective(x)).epsilon(1e-14));
      const Eigen::VectorXd fd = central_difference_gradient(f, x, 1e-6);
      const double rel = (g - fd).norm() / std::max(fd.norm(), 1e-8);
      worst = std::max(worst, rel);
    }
  }
  CHECK(points == 100);
  CHECK(worst <= 1e-4);
}

TEST_CASE("correlated deviations dominate local ones") {
  for (double alpha : {0.0, oracle::pi / 4}) {
    const OptimizerOptions o = opts(2, 8);
    const double local = minimize_fidelity(deg(1), alpha, o).best_value;
    const double corr = minimize_fidelity_correlated(deg(1), alpha, o).best_value;
    CHECK(corr <= local + 1e-6);
  }
}

TEST_CASE("single-qubit floor on a small sample") {
  const BoundCheckReport r = single_qubit_bound_check({deg(5), deg(30)}, 500, 12);
  CHECK(r.violations == 0);
  CHECK(r.trials_per_epsilon == 500);
  CHECK(r.min_margin >= -1e-6);
}
