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

// Maximum-likelihood reconstruction by iterating the R operator
//
//   R(rho) = (1/K) sum_{k,a} f(a|k) / tr(rho Pi_{a,k}) Pi_{a,k},
//
// whose fixed points rho = N[R rho R] are the likelihood maximizers (K is the
// number of joint settings, so R = 1 on exact data). Each accepted step must
// not decrease the log-likelihood:
//
//  1. the exponentiated step N[R^b rho R^b], b >= 1 adapted multiplicatively
//     (b = 1 is the plain R rho R update); rank-deficient optima are reached
//     in O(log) rather than O(1/tol) iterations this way;
//  2. when b = 1 fails, the diluted step N[(1 + k R) rho (1 + k R)] with k
//     halved from 1 until the likelihood increases.
//
// Comparisons use the rounding level of the likelihood sum: a step with b > 1
// must gain more than that, the plain and diluted steps may lose at most that
// much. The iteration starts from the clipped linear-inversion estimate.
//
// Flat directions of the likelihood (entangled states seen through a few
// settings) make the fixed-point iteration crawl. With opts.polish the
// iterate is periodically handed to a quasi-Newton ascent in the factor
// rho = A A^dagger / tr(A A^dagger), which has no constraints and converges
// superlinearly, also onto rank-deficient optima. Its result replaces rho
// only if the likelihood went up, so the trace stays monotone.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "misalign/box_quasi_newton.hpp"
#include "misalign/tomography.hpp"

namespace misalign {

namespace {

struct PovmTerm {
  double weight;  // observed probability
  CMatrix op;     // intended projector
};

class LikelihoodModel {
 public:
  LikelihoodModel(const OutcomeStatistics& stats, const MeasurementPlan& plan) {
    if (stats.n_parties() != plan.n_parties()) throw std::invalid_argument("MLE: statistics/plan party mismatch");
    for (int j = 0; j < plan.n_parties(); ++j)
      if (stats.settings_shape()[j] != plan.n_settings(j))
        throw std::invalid_argument("MLE: statistics/plan setting mismatch");
    n_ = plan.n_parties();
    dim_ = 1 << n_;
    settings_ = stats.n_joint_settings();
    std::vector<Matrix2c> factors(n_);
    for (int joint = 0; joint < settings_; ++joint) {
      const std::vector<int> k = plan.joint_tuple(joint);
      for (int a = 0; a < stats.n_outcomes(); ++a) {
        const double f = stats.probability(joint, a);
        if (f < kZeroProbability) continue;
        for (int j = 0; j < n_; ++j) factors[j] = outcome_projector(plan.intended(j, k[j]), ((a >> (n_ - 1 - j)) & 1) ? -1 : 1);
        terms_.push_back({f, kron_all(factors)});
      }
    }
  }

  int dim() const { return dim_; }

  double log_likelihood(const CMatrix& rho) const {
    double acc = 0.0;
    for (const auto& t : terms_) {
      const double p = expectation(t.op, rho);
      if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += t.weight * std::log(p);
    }
    return acc;
  }

  /// Rounding level of log_likelihood at rho.
  double likelihood_noise(const CMatrix& rho) const {
    double mag = 0.0;
    for (const auto& t : terms_) mag += t.weight * std::abs(std::log(std::max(expectation(t.op, rho), 1e-300)));
    return 8.0 * std::numeric_limits<double>::epsilon() * (mag + 1.0);
  }

  /// Log-likelihood of A A^dagger / tr(A A^dagger) and its gradient
  /// dL/dRe A + i dL/dIm A.
  double factor_value(const CMatrix& a, CMatrix* grad) const {
    const CMatrix g = a * a.adjoint();
    const double t = g.trace().real();
    double acc = 0.0, total = 0.0;
    CMatrix w = CMatrix::Zero(dim_, dim_);
    for (const auto& term : terms_) {
      const double q = expectation(term.op, g);
      if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
      acc += term.weight * std::log(q);
      total += term.weight;
      if (grad) w += (term.weight / q) * term.op;
    }
    if (grad) *grad = 2.0 * (w - (total / t) * CMatrix::Identity(dim_, dim_)) * a;
    return acc - total * std::log(t);
  }

  CMatrix r_operator(const CMatrix& rho) const {
    CMatrix r = CMatrix::Zero(dim_, dim_);
    for (const auto& t : terms_) {
      const double p = std::max(expectation(t.op, rho), std::numeric_limits<double>::min());
      r += (t.weight / p) * t.op;
    }
    r /= static_cast<double>(settings_);
    return 0.5 * (r + r.adjoint());
  }

 private:
  int n_ = 0;
  int dim_ = 0;
  int settings_ = 0;
  std::vector<PovmTerm> terms_;
};

CMatrix normalized_sandwich(const CMatrix& g, const CMatrix& rho) {
  CMatrix out = g * rho * g.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return out / out.trace().real();
}

double trace_norm(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  return hermitian_eigenvalues(h).cwiseAbs().sum();
}

/// R^b up to a positive scale (the scale cancels after normalization).
CMatrix scaled_power(const CMatrix& r, double b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::log(std::max(ev.maxCoeff(), std::numeric_limits<double>::min()));
  Eigen::VectorXd scaled(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    scaled(i) = ev(i) > 0.0 ? std::exp(b * (std::log(ev(i)) - top)) : 0.0;
  return es.eigenvectors() * scaled.asDiagonal() * es.eigenvectors().adjoint();
}

/// Linear-inversion estimate with its spectrum clipped to [floor, 1] and
/// renormalized; falls back to the maximally mixed state when the intended
/// settings are not tomographically complete.
CMatrix starting_point(const OutcomeStatistics& stats, const MeasurementPlan& intended, double floor) {
  const int d = 1 << intended.n_parties();
  CMatrix raw;
  try {
    raw = linear_inversion_matrix(stats, intended);
  } catch (const NotTomographicallyComplete&) {
    return CMatrix::Identity(d, d) / static_cast<double>(d);
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(raw);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  ev /= ev.sum();
  CMatrix rho = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (rho + rho.adjoint());
}

/// Quasi-Newton ascent of the likelihood over the factor of rho; rho and
/// loglik are replaced only on improvement.
void factor_polish(const LikelihoodModel& model, CMatrix& rho, double& loglik) {
  const int d = model.dim();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
  const CMatrix a0 = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  auto unpack = [d](const Eigen::VectorXd& x) {
    CMatrix a(d, d);
    for (int i = 0; i < d * d; ++i) a(i / d, i % d) = cplx(x(2 * i), x(2 * i + 1));
    return a;
  };
  Eigen::VectorXd x0(2 * d * d);
  for (int i = 0; i < d * d; ++i) {
    x0(2 * i) = a0(i / d, i % d).real();
    x0(2 * i + 1) = a0(i / d, i % d).imag();
  }
  const Objective value = [&](const Eigen::VectorXd& x) {
    const double v = model.factor_value(unpack(x), nullptr);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  const ObjectiveWithGradient with_grad = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    CMatrix ga;
    const double v = model.factor_value(unpack(x), &ga);
    g.resize(x.size());
    for (int i = 0; i < d * d; ++i) {
      g(2 * i) = -ga(i / d, i % d).real();
      g(2 * i + 1) = -ga(i / d, i % d).imag();
    }
    return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
  };
  QuasiNewtonOptions qo;
  qo.max_iter = 400;
  qo.gtol = 1e-13;
  qo.ftol = 1e-16;
  const QuasiNewtonResult res = minimize_box(value, with_grad, x0, BoxBounds::unbounded(x0.size()), qo);
  if (!res.usable()) return;
  const CMatrix a = unpack(res.x);
  CMatrix cand = a * a.adjoint();
  cand = 0.5 * (cand + cand.adjoint()).eval();
  cand /= cand.trace().real();
  const double cand_ll = model.log_likelihood(cand);
  if (cand_ll > loglik) {
    rho = cand;
    loglik = cand_ll;
  }
}

}  // namespace

double log_likelihood(const OutcomeStatistics& stats, const MeasurementPlan& intended, const CMatrix& rho) {
  return LikelihoodModel(stats, intended).log_likelihood(rho);
}

double mle_fixed_point_residual(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                const DensityMatrix& rho) {
  const LikelihoodModel model(stats, intended);
  const CMatrix r = model.r_operator(rho.matrix());
  return trace_norm(normalized_sandwich(r, rho.matrix()) - rho.matrix());
}

ReconstructionResult mle_reconstruct(const OutcomeStatistics& stats, const MeasurementPlan& intended,
                                     const MleOptions& opts) {
  const LikelihoodModel model(stats, intended);
  const int d = model.dim();
  const CMatrix identity = CMatrix::Identity(d, d);

  CMatrix rho = starting_point(stats, intended, opts.start_floor);
  double loglik = model.log_likelihood(rho);
  if (!std::isfinite(loglik)) {
    rho = identity / static_cast<double>(d);
    loglik = model.log_likelihood(rho);
  }
  double exponent = 1.0;
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  long iter = 0;
  std::vector<double> trace;
  if (opts.record_likelihood) trace.push_back(loglik);

  // One monotone step of x; false when stalled at rounding level.
  auto step = [&](CMatrix& x, double& ll, const CMatrix& r, const CMatrix& plain) {
    const double noise = model.likelihood_noise(x);
    for (;;) {
      const CMatrix candidate = exponent == 1.0 ? plain : normalized_sandwich(scaled_power(r, exponent), x);
      const double cand_ll = model.log_likelihood(candidate);
      if (exponent == 1.0 ? cand_ll >= ll - noise : cand_ll > ll + noise) {
        x = candidate;
        ll = cand_ll;
        exponent = std::min(2.0 * exponent, opts.max_exponent);
        return true;
      }
      if (exponent == 1.0) break;
      exponent = std::max(1.0, exponent / 4.0);
    }
    for (double kappa = 1.0; kappa > 1e-12; kappa *= 0.5) {
      const CMatrix candidate = normalized_sandwich(identity + kappa * r, x);
      const double cand_ll = model.log_likelihood(candidate);
      if (cand_ll >= ll - noise) {
        x = candidate;
        ll = cand_ll;
        return true;
      }
    }
    return false;
  };

  for (; iter < opts.max_iter; ++iter) {
    const CMatrix r = model.r_operator(rho);
    const CMatrix plain = normalized_sandwich(r, rho);
    residual = trace_norm(plain - rho);
    if (residual <= opts.tol) {
      converged = true;
      break;
    }

    if (!step(rho, loglik, r, plain)) break;
    if (opts.polish && (iter + 1 == opts.polish_after ||
                        (iter + 1 > opts.polish_after && (iter + 1 - opts.polish_after) % opts.polish_every == 0)))
      factor_polish(model, rho, loglik);
    if (opts.record_likelihood) trace.push_back(loglik);
  }

  if (!converged) {
    const CMatrix r = model.r_operator(rho);
    residual = trace_norm(normalized_sandwich(r, rho) - rho);
    converged = residual <= opts.tol;
  }

  return ReconstructionResult{DensityMatrix(rho), ReconstructionMethod::MaximumLikelihood, converged, iter, residual,
                              true, std::move(trace)};
}

}  // namespace misalign
