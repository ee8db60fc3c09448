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

#include "misalign/box_quasi_newton.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace misalign {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Variables pinned at a bound with the descent direction pointing out of the box.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                                  const BoxBounds& b) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double span = std::max(1.0, std::abs(x(i)));
    const bool at_lower = x(i) <= b.lower(i) + 1e-14 * span;
    const bool at_upper = x(i) >= b.upper(i) - 1e-14 * span;
    active(i) = (at_lower && g(i) > 0.0) || (at_upper && g(i) < 0.0);
  }
  return active;
}

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const BoxBounds& b) {
  return (b.project(x - g) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

BoxBounds BoxBounds::unbounded(Eigen::Index n) {
  return {Eigen::VectorXd::Constant(n, -kInf), Eigen::VectorXd::Constant(n, kInf)};
}

Eigen::VectorXd BoxBounds::project(const Eigen::VectorXd& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

bool BoxBounds::contains(const Eigen::VectorXd& x) const {
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

std::string to_string(QuasiNewtonStatus s) {
  switch (s) {
    case QuasiNewtonStatus::GradientTolerance: return "gradient-tolerance";
    case QuasiNewtonStatus::FunctionTolerance: return "function-tolerance";
    case QuasiNewtonStatus::MaxIterations: return "max-iterations";
    case QuasiNewtonStatus::LineSearchFailure: return "line-search-failure";
    case QuasiNewtonStatus::NonFinite: return "non-finite";
  }
  return "unknown";
}

Eigen::VectorXd central_difference_gradient(const Objective& f, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x(i);
    probe(i) = xi + h;
    const double fp = f(probe);
    probe(i) = xi - h;
    const double fm = f(probe);
    probe(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace {

QuasiNewtonResult minimize_core(const Objective& value, const ObjectiveWithGradient& f, const Eigen::VectorXd& x0,
                                const BoxBounds& bounds, const QuasiNewtonOptions& opts) {
  const Eigen::Index n = x0.size();
  if (bounds.lower.size() != n || bounds.upper.size() != n) throw std::invalid_argument("minimize_box: bound size mismatch");
  if ((bounds.lower.array() > bounds.upper.array()).any()) throw std::invalid_argument("minimize_box: empty box");

  QuasiNewtonResult res;
  res.x = bounds.project(x0);
  Eigen::VectorXd g(n);
  res.value = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !g.allFinite()) {
    res.status = QuasiNewtonStatus::NonFinite;
    return res;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  int stalls = 0;
  Eigen::VectorXd g_new(n);

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    res.projected_gradient_norm = projected_gradient_norm(res.x, g, bounds);
    if (res.projected_gradient_norm <= opts.gtol) {
      res.status = QuasiNewtonStatus::GradientTolerance;
      return res;
    }

    const auto active = active_set(res.x, g, bounds);
    Eigen::VectorXd g_free = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (active(i)) g_free(i) = 0.0;
    Eigen::VectorXd d = -(h_inv * g_free);
    for (Eigen::Index i = 0; i < n; ++i)
      if (active(i)) d(i) = 0.0;
    if (!(d.dot(g_free) < 0.0)) {
      h_inv.setIdentity();
      scaled = false;
      d = -g_free;
    }

    // Backtracking along the projected path.
    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, t *= 0.5) {
      x_new = bounds.project(res.x + t * d);
      f_new = value(x_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + opts.armijo * g.dot(x_new - res.x)) {
        f_new = f(x_new, g_new);
        ++res.evaluations;
        accepted = std::isfinite(f_new) && g_new.allFinite();
        break;
      }
    }
    if (!accepted) {
      if (!scaled && h_inv.isIdentity()) {
        res.status = QuasiNewtonStatus::LineSearchFailure;
        return res;
      }
      h_inv.setIdentity();  // retry next iteration with steepest descent
      scaled = false;
      continue;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double improvement = res.value - f_new;
    res.x = x_new;
    res.value = f_new;
    g = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (!scaled) {
        h_inv *= sy / y.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }

    if (improvement <= opts.ftol * (std::abs(res.value) + opts.ftol)) {
      if (++stalls >= opts.stall_iters) {
        res.projected_gradient_norm = projected_gradient_norm(res.x, g, bounds);
        res.status = QuasiNewtonStatus::FunctionTolerance;
        return res;
      }
    } else {
      stalls = 0;
    }
  }
  res.projected_gradient_norm = projected_gradient_norm(res.x, g, bounds);
  res.status = QuasiNewtonStatus::MaxIterations;
  return res;
}

}  // namespace

QuasiNewtonResult minimize_box(const ObjectiveWithGradient& f, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                               const QuasiNewtonOptions& opts) {
  Eigen::VectorXd scratch;
  const Objective value = [&](const Eigen::VectorXd& x) { return f(x, scratch); };
  return minimize_core(value, f, x0, bounds, opts);
}

QuasiNewtonResult minimize_box(const Objective& value, const ObjectiveWithGradient& f, const Eigen::VectorXd& x0,
                               const BoxBounds& bounds, const QuasiNewtonOptions& opts) {
  return minimize_core(value, f, x0, bounds, opts);
}

QuasiNewtonResult minimize_box(const Objective& f, const Eigen::VectorXd& x0, const BoxBounds& bounds,
                               const QuasiNewtonOptions& opts) {
  long extra = 0;
  const ObjectiveWithGradient fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = central_difference_gradient(f, x, opts.fd_step);
    extra += 2 * x.size();
    return f(x);
  };
  QuasiNewtonResult res = minimize_core(f, fg, x0, bounds, opts);
  res.evaluations += extra;
  return res;
}

}  // namespace misalign
