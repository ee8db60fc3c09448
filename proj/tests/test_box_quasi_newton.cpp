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

#include <cmath>
#include <limits>

#include "misalign/box_quasi_newton.hpp"

using namespace misalign;
using doctest::Approx;

namespace {

double rosenbrock(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  g.resize(2);
  const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
  g(0) = -2.0 * a - 400.0 * x(0) * b;
  g(1) = 200.0 * b;
  return a * a + 100.0 * b * b;
}

BoxBounds box(std::initializer_list<double> lo, std::initializer_list<double> hi) {
  BoxBounds b;
  b.lower = Eigen::Map<const Eigen::VectorXd>(lo.begin(), static_cast<Eigen::Index>(lo.size()));
  b.upper = Eigen::Map<const Eigen::VectorXd>(hi.begin(), static_cast<Eigen::Index>(hi.size()));
  return b;
}

}  // namespace

TEST_CASE("unbounded Rosenbrock") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const QuasiNewtonResult r = minimize_box(rosenbrock, x0, BoxBounds::unbounded(2));
  CHECK(r.usable());
  CHECK(r.x(0) == Approx(1.0).epsilon(1e-6));
  CHECK(r.x(1) == Approx(1.0).epsilon(1e-6));
  CHECK(r.value < 1e-12);
}

TEST_CASE("active bound") {
  // Minimum of the Rosenbrock valley restricted to x0 <= 0.5 sits at (0.5, 0.25).
  Eigen::VectorXd x0(2);
  x0 << -1.0, 2.0;
  const QuasiNewtonResult r = minimize_box(rosenbrock, x0, box({-2.0, -2.0}, {0.5, 2.0}));
  CHECK(r.x(0) == Approx(0.5).epsilon(1e-9));
  CHECK(r.x(1) == Approx(0.25).epsilon(1e-6));
  CHECK(r.value == Approx(0.25).epsilon(1e-12));
}

TEST_CASE("start outside the box is projected") {
  Eigen::VectorXd x0(2);
  x0 << 5.0, -5.0;
  const auto quad = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * x;
    return x.squaredNorm();
  };
  const BoxBounds b = box({1.0, -1.0}, {2.0, 1.0});
  const QuasiNewtonResult r = minimize_box(quad, x0, b);
  CHECK(b.contains(r.x));
  CHECK(r.x(0) == Approx(1.0));
  CHECK(std::abs(r.x(1)) < 1e-8);
}

TEST_CASE("numerical gradients") {
  const Objective f = [](const Eigen::VectorXd& x) { return std::sin(x(0)) * std::exp(x(1)); };
  Eigen::VectorXd x(2);
  x << 0.3, -0.2;
  const Eigen::VectorXd g = central_difference_gradient(f, x, 1e-6);
  CHECK(g(0) == Approx(std::cos(0.3) * std::exp(-0.2)).epsilon(1e-8));
  CHECK(g(1) == Approx(std::sin(0.3) * std::exp(-0.2)).epsilon(1e-8));

  const Objective quad = [](const Eigen::VectorXd& y) { return (y.array() - 0.25).square().sum(); };
  const QuasiNewtonResult r = minimize_box(quad, Eigen::VectorXd::Zero(3), box({0, 0, 0}, {1, 1, 1}));
  CHECK((r.x.array() - 0.25).abs().maxCoeff() < 1e-6);
}

TEST_CASE("value-only line search overload agrees") {
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const Objective value = [](const Eigen::VectorXd& x) {
    Eigen::VectorXd g;
    return rosenbrock(x, g);
  };
  const QuasiNewtonResult a = minimize_box(rosenbrock, x0, BoxBounds::unbounded(2));
  const QuasiNewtonResult b = minimize_box(value, rosenbrock, x0, BoxBounds::unbounded(2));
  CHECK((a.x - b.x).norm() < 1e-8);
}

TEST_CASE("non-finite objective is reported") {
  const Objective bad = [](const Eigen::VectorXd&) { return std::numeric_limits<double>::quiet_NaN(); };
  const QuasiNewtonResult r = minimize_box(bad, Eigen::VectorXd::Zero(2), BoxBounds::unbounded(2));
  CHECK(r.status == QuasiNewtonStatus::NonFinite);
  CHECK_FALSE(r.usable());
  CHECK(to_string(r.status) == "non-finite");
}

TEST_CASE("iteration limit") {
  QuasiNewtonOptions o;
  o.max_iter = 2;
  o.gtol = 0.0;
  o.ftol = 0.0;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  const QuasiNewtonResult r = minimize_box(rosenbrock, x0, BoxBounds::unbounded(2), o);
  CHECK(r.status == QuasiNewtonStatus::MaxIterations);
  CHECK(r.iterations == 2);
  CHECK(r.usable());
}
