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

#include <functional>
#include <string>

#include <Eigen/Core>

namespace misalign {

using Objective = std::function<double(const Eigen::VectorXd&)>;
/// Writes the gradient into the second argument and returns the value.
using ObjectiveWithGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct BoxBounds {
  Eigen::VectorXd lower;  // -inf allowed
  Eigen::VectorXd upper;  // +inf allowed

  static BoxBounds unbounded(Eigen::Index n);
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const;
};

struct QuasiNewtonOptions {
  int max_iter = 500;
  /// Stop when the infinity norm of the projected gradient falls below this.
  double gtol = 1e-8;
  /// Stop after `stall_iters` consecutive iterations improving f by less
  /// than ftol * (|f| + ftol).
  double ftol = 1e-12;
  int stall_iters = 3;
  /// Central-difference step for numerical gradients.
  double fd_step = 1e-6;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

enum class QuasiNewtonStatus { GradientTolerance, FunctionTolerance, MaxIterations, LineSearchFailure, NonFinite };

std::string to_string(QuasiNewtonStatus s);

struct QuasiNewtonResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  long evaluations = 0;
  QuasiNewtonStatus status = QuasiNewtonStatus::MaxIterations;
  double projected_gradient_norm = 0.0;

  /// Tolerance and iteration-limit exits both count as usable results.
  bool usable() const { return status != QuasiNewtonStatus::NonFinite; }
};

/// Central-difference gradient. Evaluates f at x +- h e_i without clamping,
/// so f must be defined slightly outside the box.
Eigen::VectorXd central_difference_gradient(const Objective& f, const Eigen::VectorXd& x, double h);

/// Projected BFGS: variables at a bound whose gradient points outwards are
/// held fixed, the inverse-Hessian step is taken in the remaining ones, and
/// a backtracking Armijo search runs along the projected path. The start
/// point is projected into the box first.
QuasiNewtonResult minimize_box(const ObjectiveWithGradient& f, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                               const QuasiNewtonOptions& opts = {});

/// Same, with a cheaper value-only callable for line-search trial points.
QuasiNewtonResult minimize_box(const Objective& value, const ObjectiveWithGradient& f, const Eigen::VectorXd& x0,
                               const BoxBounds& bounds, const QuasiNewtonOptions& opts = {});

/// Same with gradients from central_difference_gradient.
QuasiNewtonResult minimize_box(const Objective& f, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                               const QuasiNewtonOptions& opts = {});

}  // namespace misalign
