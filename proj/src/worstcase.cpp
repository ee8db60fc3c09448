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

#include "misalign/worstcase.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>

#include <Eigen/SVD>
#include <omp.h>

#include "local_ops.hpp"

namespace misalign {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

struct DirectionJet {
  BlochVector n, dp, daz;
};

/// deviate(m, p * eps, az) and its partial derivatives in p and az.
DirectionJet direction_jet(const BlochVector& m, double eps, double p, double az) {
  const auto [e1, e2] = tangent_frame(m);
  const double polar = p * eps;
  const double c = std::cos(polar), s = std::sin(polar);
  const BlochVector u = std::cos(az) * e1 + std::sin(az) * e2;
  const BlochVector du = -std::sin(az) * e1 + std::cos(az) * e2;
  return {c * m + s * u, eps * (-s * m + c * u), s * du};
}

BlochVector direction_at(const BlochVector& m, double eps, double p, double az) {
  const auto [e1, e2] = tangent_frame(m);
  const double polar = p * eps;
  return (std::cos(polar) * m + std::sin(polar) * (std::cos(az) * e1 + std::sin(az) * e2)).normalized();
}

/// (p, az) reproducing `actual` from `intended` at budget eps.
std::pair<double, double> encode_direction(const BlochVector& intended, const BlochVector& actual, double eps) {
  const auto [polar, az] = deviation_angles(intended, actual);
  if (eps <= 0.0) return {0.0, az};
  return {std::clamp(polar / eps, 0.0, 1.0), az};
}

BlochVector bloch_of(const CVector& u) {
  const cplx c = std::conj(u(0)) * u(1);
  return BlochVector(2.0 * c.real(), 2.0 * c.imag(), std::norm(u(0)) - std::norm(u(1)));
}

double uniform_angle(CounterRng& rng) { return rng.uniform(0.0, 2.0 * kPi); }

// ---------------------------------------------------------------------------
// Restart pool.

struct RestartOutcome {
  RestartRecord record;
  Eigen::VectorXd x;
  unsigned mask = 0;
};

using RestartBody = std::function<RestartOutcome(int restart, int attempt)>;

RestartOutcome run_with_retries(const RestartBody& body, int restart, int retries) {
  RestartOutcome last;
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      last = body(restart, attempt);
    } catch (const std::exception& e) {
      last = RestartOutcome{};
      last.record.index = restart;
      last.record.ok = false;
      last.record.value = kNaN;
      last.record.status = "exception";
      last.record.note = e.what();
      last.record.origin = attempt == 0 ? "unknown" : "random";
    }
    last.record.attempts = attempt + 1;
    if (last.record.ok) break;
  }
  return last;
}

OptimizationResult run_pool(int restarts, const OptimizerOptions& opts, const RestartBody& body) {
  if (restarts < 1) throw std::invalid_argument("need at least one restart");
  std::vector<RestartOutcome> out(restarts);
  if (opts.execution == Execution::Parallel) {
    const int threads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int r = 0; r < restarts; ++r) out[r] = run_with_retries(body, r, opts.retries);
  } else {
    for (int r = 0; r < restarts; ++r) out[r] = run_with_retries(body, r, opts.retries);
  }

  OptimizationResult res;
  res.seed = opts.seed;
  res.restarts = restarts;
  res.best_value = kNaN;
  for (int r = 0; r < restarts; ++r) {
    const auto& o = out[r];
    res.per_restart.push_back(o.record.ok ? o.record.value : kNaN);
    res.records.push_back(o.record);
    if (!o.record.ok) {
      ++res.failed_restarts;
      continue;
    }
    if (res.best_restart < 0 || o.record.value < res.best_value) {
      res.best_value = o.record.value;
      res.best_restart = r;
      res.argmin = o.x;
      res.bipartition_mask = o.mask;
    }
  }
  return res;
}

std::uint64_t retry_stream(int restart, int attempt) {
  return static_cast<std::uint64_t>(restart) + (static_cast<std::uint64_t>(attempt) << 32);
}

}  // namespace

// ---------------------------------------------------------------------------
// Fixtures.

CVector psi_s(int sign) {
  if (sign != 1 && sign != -1) throw std::invalid_argument("psi_s: sign must be +1 or -1");
  const double r3 = std::sqrt(3.0);
  const double amp = std::sqrt(2.0 - sign * r3);
  CVector v(2);
  v << 1.0, sign * amp * std::exp(cplx(0.0, kPi / 4));
  return v / std::sqrt(3.0 - sign * r3);
}

Fixture appendix_fixture(FixtureKind kind, const FixtureParams& params) {
  const double eps = params.eps;
  switch (kind) {
    case FixtureKind::LowAlpha:
    case FixtureKind::HighAlpha: {
      if (!(eps >= 0.0 && eps <= kPi / 2)) throw std::invalid_argument("two-qubit fixtures need 0 <= eps <= pi/2");
      if (!(params.alpha >= 0.0 && params.alpha <= kPi / 4)) throw std::invalid_argument("alpha must lie in [0, pi/4]");
      const double ca = std::cos(params.alpha), sa = std::sin(params.alpha);
      const double concurrence = std::sin(2.0 * params.alpha);
      if (kind == FixtureKind::LowAlpha) {
        const CVector plus = psi_s(1), minus = psi_s(-1);
        const CVector v = std::exp(cplx(0.0, 2.0 * kPi / 3.0)) * ca * kron(plus, plus) + sa * kron(minus, minus);
        return {PureState::normalized(v), triad_plan(2, tomography_open_triad(eps)), concurrence <= 0.56, {plus, plus}};
      }
      const double th = kHighAlphaTheta;
      const BlochVector axis(std::sin(th) / std::numbers::sqrt2, std::cos(th), std::sin(th) / std::numbers::sqrt2);
      const Matrix2c basis = measurement_basis(axis);
      CVector plus = basis.col(0), minus = basis.col(1);
      plus *= std::exp(cplx(0.0, kHighAlphaPhi)) * std::conj(plus(0)) / std::abs(plus(0));
      minus *= std::conj(minus(0)) / std::abs(minus(0));
      const CVector v = ca * kron(plus, plus) + sa * kron(minus, minus);
      const double c = std::cos(eps), s = std::sin(eps);
      const double cg = std::cos(kHighAlphaGamma), sg = std::sin(kHighAlphaGamma);
      const Triad axes = {BlochVector(c, s * cg, s * sg), BlochVector(-s / std::numbers::sqrt2, c, -s / std::numbers::sqrt2),
                          BlochVector(s * sg, s * cg, c)};
      return {PureState::normalized(v), triad_plan(2, axes), concurrence >= 0.87, {plus, plus}};
    }
    case FixtureKind::EvenGhz:
    case FixtureKind::OddGhz: {
      const Parity parity = kind == FixtureKind::EvenGhz ? Parity::Even : Parity::Odd;
      return {biseparable_fixture(params.n, parity), ghz_plan(params.n, eps, parity),
              ghz_epsilon_in_validated_range(params.n, eps), {}};
    }
  }
  throw std::invalid_argument("unknown fixture kind");
}

// ---------------------------------------------------------------------------
// FidelityProblem.

FidelityProblem::FidelityProblem(double eps, double alpha, PlanMode mode, MleOptions mle)
    : eps_(eps), alpha_(alpha), mode_(mode), mle_(mle), intended_(standard_pauli_plan(2)) {
  if (!(eps >= 0.0 && eps <= kPi / 2)) throw std::invalid_argument("FidelityProblem: eps must lie in [0, pi/2]");
  if (!(alpha >= 0.0 && alpha <= kPi / 4 + 1e-15)) throw std::invalid_argument("FidelityProblem: alpha must lie in [0, pi/4]");
  slots_ = mode == PlanMode::Local ? 3 : 9;
  plan_vars_ = 2 * 2 * slots_;
}

BoxBounds FidelityProblem::bounds() const {
  BoxBounds b = BoxBounds::unbounded(n_vars());
  for (int i = 0; i < plan_vars_; i += 2) {
    b.lower(i) = 0.0;
    b.upper(i) = 1.0;
  }
  return b;
}

PureState FidelityProblem::state(const Eigen::VectorXd& x) const {
  std::array<CVector, 2> plus, minus;
  for (int j = 0; j < 2; ++j) {
    const double th = x(plan_vars_ + 3 * j), ph = x(plan_vars_ + 3 * j + 1), chi = x(plan_vars_ + 3 * j + 2);
    const double c = std::cos(th / 2), s = std::sin(th / 2);
    plus[j] = CVector(2);
    minus[j] = CVector(2);
    plus[j] << c, std::exp(cplx(0.0, ph)) * s;
    minus[j] << -std::exp(cplx(0.0, chi - ph)) * s, std::exp(cplx(0.0, chi)) * c;
  }
  const CVector v = std::cos(alpha_) * kron(plus[0], plus[1]) + std::sin(alpha_) * kron(minus[0], minus[1]);
  return PureState::normalized(v);
}

MeasurementPlan FidelityProblem::plan(const Eigen::VectorXd& x) const {
  MeasurementPlan::DirectionTable actual(2);
  for (int j = 0; j < 2; ++j) {
    for (int s = 0; s < slots_; ++s) {
      const int k = mode_ == PlanMode::Local ? s : intended_.joint_tuple(s)[j];
      const int base = 2 * (j * slots_ + s);
      actual[j].push_back(direction_at(intended_.intended(j, k), eps_, x(base), x(base + 1)));
    }
  }
  if (mode_ == PlanMode::Local) return intended_.with_actual(std::move(actual));
  return MeasurementPlan::correlated(intended_.intended_table(), std::move(actual));
}

ReconstructionResult FidelityProblem::reconstruction(const Eigen::VectorXd& x) const {
  const OutcomeStatistics stats = simulate_statistics(state(x).density(), plan(x));
  return reconstruct(stats, intended_, mle_);
}

double FidelityProblem::objective(const Eigen::VectorXd& x) const {
  const PureState psi = state(x);
  const OutcomeStatistics stats = simulate_statistics(psi.density(), plan(x));
  const ReconstructionResult r = reconstruct(stats, intended_, mle_);
  return psi.amplitudes().dot(r.rho.matrix() * psi.amplitudes()).real();
}

Eigen::VectorXd FidelityProblem::encode(const PureState& psi, const std::array<CVector, 2>& plus_vectors,
                                        const MeasurementPlan& given) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_vars());
  const MeasurementPlan p = (mode_ == PlanMode::Correlated) ? given.to_correlated() : given;
  if (p.mode() != mode_) throw std::invalid_argument("FidelityProblem::encode: plan mode mismatch");
  for (int j = 0; j < 2; ++j) {
    for (int s = 0; s < slots_; ++s) {
      const int k = mode_ == PlanMode::Local ? s : intended_.joint_tuple(s)[j];
      const auto [pv, az] = encode_direction(intended_.intended(j, k), p.actual_slot(j, s), eps_);
      x(2 * (j * slots_ + s)) = pv;
      x(2 * (j * slots_ + s) + 1) = az;
    }
    const BlochVector b = bloch_of(plus_vectors[j].normalized());
    x(plan_vars_ + 3 * j) = std::acos(std::clamp(b.z(), -1.0, 1.0));
    x(plan_vars_ + 3 * j + 1) = std::atan2(b.y(), b.x());
  }
  // Relative phase between the two Schmidt terms, from the overlaps with
  // |+ +> and |- -> at chi = 0.
  const double ca = std::cos(alpha_), sa = std::sin(alpha_);
  std::array<CVector, 2> pl, mi;
  for (int j = 0; j < 2; ++j) {
    const double th = x(plan_vars_ + 3 * j), ph = x(plan_vars_ + 3 * j + 1);
    pl[j] = CVector(2);
    mi[j] = CVector(2);
    pl[j] << std::cos(th / 2), std::exp(cplx(0.0, ph)) * std::sin(th / 2);
    mi[j] << -std::exp(cplx(0.0, -ph)) * std::sin(th / 2), std::cos(th / 2);
  }
  const cplx a = kron(pl[0], pl[1]).dot(psi.amplitudes());
  const cplx b = kron(mi[0], mi[1]).dot(psi.amplitudes());
  if (sa > 1e-12 && ca > 1e-12 && std::abs(a) > 1e-12 && std::abs(b) > 1e-12) x(plan_vars_ + 2) = std::arg(b) - std::arg(a);
  return x;
}

Eigen::VectorXd FidelityProblem::random_start(CounterRng& rng) const {
  Eigen::VectorXd x(n_vars());
  for (int i = 0; i < plan_vars_; i += 2) {
    x(i) = rng.uniform();
    x(i + 1) = uniform_angle(rng);
  }
  for (int j = 0; j < 2; ++j) {
    x(plan_vars_ + 3 * j) = std::acos(1.0 - 2.0 * rng.uniform());
    x(plan_vars_ + 3 * j + 1) = uniform_angle(rng);
    x(plan_vars_ + 3 * j + 2) = uniform_angle(rng);
  }
  return x;
}

// ---------------------------------------------------------------------------
// WitnessProblem.

std::vector<unsigned> enumerate_bipartitions(int n) {
  if (n < 2 || n > 16) throw std::invalid_argument("bipartitions need 2 <= n <= 16");
  std::vector<unsigned> out;
  for (unsigned m = 1; m < (1u << (n - 1)); ++m) out.push_back(m);
  return out;
}

WitnessProblem::WitnessProblem(WitnessSpec spec, double eps, PlanMode mode, unsigned bipartition_mask,
                               bool deform_projector_settings)
    : spec_(std::move(spec)), eps_(eps), mode_(mode), mask_(bipartition_mask), deform_projectors_(deform_projector_settings) {
  const int n = spec_.n_parties();
  if (!(eps >= 0.0 && eps <= kPi)) throw std::invalid_argument("WitnessProblem: eps must lie in [0, pi]");
  if (n < 2) throw std::invalid_argument("WitnessProblem needs at least two parties");
  if (mask_ == 0 || mask_ >= (1u << n) - 1) throw std::invalid_argument("WitnessProblem: bipartition must be proper");
  for (int j = 0; j < n; ++j) ((mask_ >> j) & 1u ? part_a_ : part_b_).push_back(j);

  const auto& intended = spec_.intended();
  std::vector<std::vector<int>> local_slot(n);
  for (int j = 0; j < n; ++j) local_slot[j].assign(intended[j].size(), -1);
  auto local = [&](int j, int k) {
    if (local_slot[j][k] < 0) {
      local_slot[j][k] = static_cast<int>(slots_.size());
      slots_.push_back({j, k, intended[j][k]});
    }
    return local_slot[j][k];
  };
  auto make = [&](const std::vector<int>& settings, bool deformable) {
    std::vector<int> ids(n, -1);
    if (!deformable) return ids;
    for (int j = 0; j < n; ++j) {
      if (mode_ == PlanMode::Local) {
        ids[j] = local(j, settings[j]);
      } else {
        ids[j] = static_cast<int>(slots_.size());
        slots_.push_back({j, settings[j], intended[j][settings[j]]});
      }
    }
    return ids;
  };
  for (const auto& t : spec_.terms()) term_slots_.push_back(make(t.settings, true));
  for (const auto& t : spec_.projector_terms()) {
    // In local mode a setting shared with an observable term moves with it.
    std::vector<int> ids = make(t.settings, deform_projectors_);
    if (!deform_projectors_ && mode_ == PlanMode::Local)
      for (int j = 0; j < n; ++j) ids[j] = local_slot[j][t.settings[j]];
    projector_slots_.push_back(ids);
  }
  plan_vars_ = 2 * static_cast<int>(slots_.size());
  state_vars_ = 2 * ((1 << part_a_.size()) + (1 << part_b_.size()));
}

BoxBounds WitnessProblem::bounds() const {
  BoxBounds b = BoxBounds::unbounded(n_vars());
  for (int i = 0; i < plan_vars_; i += 2) {
    b.lower(i) = 0.0;
    b.upper(i) = 1.0;
  }
  return b;
}

BlochVector WitnessProblem::direction(const Eigen::VectorXd& x, int slot) const {
  return direction_at(slots_[slot].intended, eps_, x(2 * slot), x(2 * slot + 1));
}

namespace {

unsigned pack_bits(unsigned idx, const std::vector<int>& parties, int n) {
  unsigned out = 0;
  for (int p : parties) out = (out << 1) | ((idx >> (n - 1 - p)) & 1u);
  return out;
}

/// R(a, b) = sum_rest conj(psi[a, rest]) phi[b, rest] at `party`.
Matrix2c reduced_pair(const CVector& psi, const CVector& phi, int n, int party) {
  const Eigen::Index stride = Eigen::Index{1} << (n - 1 - party);
  Matrix2c r = Matrix2c::Zero();
  for (Eigen::Index base = 0; base < psi.size(); base += 2 * stride) {
    for (Eigen::Index off = 0; off < stride; ++off) {
      const Eigen::Index i0 = base + off, i1 = i0 + stride;
      const cplx p0 = std::conj(psi(i0)), p1 = std::conj(psi(i1));
      r(0, 0) += p0 * phi(i0);
      r(0, 1) += p0 * phi(i1);
      r(1, 0) += p1 * phi(i0);
      r(1, 1) += p1 * phi(i1);
    }
  }
  return r;
}

double contract(const Matrix2c& op, const Matrix2c& r) { return (op.cwiseProduct(r)).sum().real(); }

}  // namespace

CVector WitnessProblem::state(const Eigen::VectorXd& x) const {
  const int n = spec_.n_parties();
  const int da = 1 << part_a_.size(), db = 1 << part_b_.size();
  CVector a(da), b(db);
  for (int i = 0; i < da; ++i) a(i) = cplx(x(plan_vars_ + 2 * i), x(plan_vars_ + 2 * i + 1));
  for (int i = 0; i < db; ++i) b(i) = cplx(x(plan_vars_ + 2 * da + 2 * i), x(plan_vars_ + 2 * da + 2 * i + 1));
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0 && nb > 0.0)) throw std::domain_error("witness state factor vanished");
  a /= na;
  b /= nb;
  CVector psi(Eigen::Index{1} << n);
  for (unsigned idx = 0; idx < static_cast<unsigned>(psi.size()); ++idx)
    psi(idx) = a(pack_bits(idx, part_a_, n)) * b(pack_bits(idx, part_b_, n));
  return psi;
}

MeasurementPlan WitnessProblem::plan(const Eigen::VectorXd& x) const {
  if (mode_ != PlanMode::Local) throw std::logic_error("WitnessProblem::plan is defined for local mode");
  MeasurementPlan::DirectionTable actual = spec_.intended();
  for (int s = 0; s < static_cast<int>(slots_.size()); ++s) actual[slots_[s].party][slots_[s].setting] = direction(x, s);
  return MeasurementPlan(spec_.intended(), std::move(actual));
}

double WitnessProblem::objective(const Eigen::VectorXd& x) const { return evaluate(x, nullptr); }

double WitnessProblem::objective(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const { return evaluate(x, &grad); }

double WitnessProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd* grad_out) const {
  if (x.size() != n_vars()) throw std::invalid_argument("WitnessProblem: wrong number of variables");
  const int n = spec_.n_parties();
  const bool want_grad = grad_out != nullptr;
  Eigen::VectorXd scratch;
  Eigen::VectorXd& grad = want_grad ? *grad_out : scratch;
  const CVector psi = state(x);
  const int n_slots = static_cast<int>(slots_.size());
  std::vector<DirectionJet> jets(n_slots);
  for (int s = 0; s < n_slots; ++s) jets[s] = direction_jet(slots_[s].intended, eps_, x(2 * s), x(2 * s + 1));

  if (want_grad) grad = Eigen::VectorXd::Zero(n_vars());
  CVector w_psi = spec_.identity_coeff() * psi;
  double value = spec_.identity_coeff();

  auto process = [&](double coeff, const std::vector<int>& settings, const std::vector<int>& ids, const int* outcomes) {
    std::vector<Matrix2c> ops(n);
    std::vector<BlochVector> dirs(n);
    for (int j = 0; j < n; ++j) {
      dirs[j] = ids[j] >= 0 ? jets[ids[j]].n : spec_.intended()[j][settings[j]];
      ops[j] = outcomes ? outcome_projector(dirs[j], outcomes[j]) : bloch_observable(dirs[j]);
    }
    CVector v = psi;
    for (int j = 0; j < n; ++j) detail::apply_local(v, n, j, ops[j]);
    value += coeff * psi.dot(v).real();
    w_psi += coeff * v;
    if (!want_grad) return;
    for (int j = 0; j < n; ++j) {
      if (ids[j] < 0) continue;
      CVector env = psi;
      for (int i = 0; i < n; ++i)
        if (i != j) detail::apply_local(env, n, i, ops[i]);
      const Matrix2c r = reduced_pair(psi, env, n, j);
      const double scale = outcomes ? 0.5 * outcomes[j] : 1.0;
      const DirectionJet& jet = jets[ids[j]];
      grad(2 * ids[j]) += coeff * scale * contract(bloch_observable(jet.dp), r);
      grad(2 * ids[j] + 1) += coeff * scale * contract(bloch_observable(jet.daz), r);
    }
  };
  for (std::size_t t = 0; t < spec_.terms().size(); ++t)
    process(spec_.terms()[t].coeff, spec_.terms()[t].settings, term_slots_[t], nullptr);
  for (std::size_t t = 0; t < spec_.projector_terms().size(); ++t) {
    const auto& pt = spec_.projector_terms()[t];
    process(pt.coeff, pt.settings, projector_slots_[t], pt.outcomes.data());
  }
  if (!want_grad) return value;

  // State gradient: dV/d conj(a_i) = (sum_k conj(b_k) G_ik) / |a| with G = W psi - V psi.
  const int da = 1 << part_a_.size(), db = 1 << part_b_.size();
  CVector a(da), b(db);
  for (int i = 0; i < da; ++i) a(i) = cplx(x(plan_vars_ + 2 * i), x(plan_vars_ + 2 * i + 1));
  for (int i = 0; i < db; ++i) b(i) = cplx(x(plan_vars_ + 2 * da + 2 * i), x(plan_vars_ + 2 * da + 2 * i + 1));
  const double na = a.norm(), nb = b.norm();
  a /= na;
  b /= nb;
  const CVector g = w_psi - value * psi;
  CVector ga = CVector::Zero(da), gb = CVector::Zero(db);
  for (unsigned idx = 0; idx < static_cast<unsigned>(psi.size()); ++idx) {
    const unsigned ia = pack_bits(idx, part_a_, n), ib = pack_bits(idx, part_b_, n);
    ga(ia) += std::conj(b(ib)) * g(idx);
    gb(ib) += std::conj(a(ia)) * g(idx);
  }
  for (int i = 0; i < da; ++i) {
    grad(plan_vars_ + 2 * i) = 2.0 * ga(i).real() / na;
    grad(plan_vars_ + 2 * i + 1) = 2.0 * ga(i).imag() / na;
  }
  for (int i = 0; i < db; ++i) {
    grad(plan_vars_ + 2 * da + 2 * i) = 2.0 * gb(i).real() / nb;
    grad(plan_vars_ + 2 * da + 2 * i + 1) = 2.0 * gb(i).imag() / nb;
  }
  return value;
}

Eigen::VectorXd WitnessProblem::encode(const PureState& psi_state, const MeasurementPlan& given) const {
  const int n = spec_.n_parties();
  if (psi_state.n_qubits() != n || given.n_parties() != n) throw std::invalid_argument("WitnessProblem::encode: size mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n_vars());
  for (int s = 0; s < static_cast<int>(slots_.size()); ++s) {
    BlochVector actual;
    if (mode_ == PlanMode::Local) {
      actual = given.mode() == PlanMode::Local ? given.actual_slot(slots_[s].party, slots_[s].setting)
                                              : throw std::invalid_argument("encode expects a local plan");
    } else {
      actual = given.actual_slot(slots_[s].party, slots_[s].setting);
    }
    const auto [p, az] = encode_direction(slots_[s].intended, actual, eps_);
    x(2 * s) = p;
    x(2 * s + 1) = az;
  }
  const int da = 1 << part_a_.size(), db = 1 << part_b_.size();
  CMatrix m = CMatrix::Zero(da, db);
  const CVector& amp = psi_state.amplitudes();
  for (unsigned idx = 0; idx < static_cast<unsigned>(amp.size()); ++idx)
    m(pack_bits(idx, part_a_, n), pack_bits(idx, part_b_, n)) = amp(idx);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  if (sv.size() > 1 && sv(1) > 1e-8) throw std::invalid_argument("state is not a product across the bipartition");
  const CVector a = svd.matrixU().col(0) * sv(0);
  const CVector b = svd.matrixV().col(0).conjugate();
  for (int i = 0; i < da; ++i) {
    x(plan_vars_ + 2 * i) = a(i).real();
    x(plan_vars_ + 2 * i + 1) = a(i).imag();
  }
  for (int i = 0; i < db; ++i) {
    x(plan_vars_ + 2 * da + 2 * i) = b(i).real();
    x(plan_vars_ + 2 * da + 2 * i + 1) = b(i).imag();
  }
  return x;
}

Eigen::VectorXd WitnessProblem::random_start(CounterRng& rng) const {
  Eigen::VectorXd x(n_vars());
  for (int i = 0; i < plan_vars_; i += 2) {
    x(i) = rng.uniform();
    x(i + 1) = uniform_angle(rng);
  }
  for (int i = plan_vars_; i < n_vars(); ++i) x(i) = rng.normal();
  return x;
}

// ---------------------------------------------------------------------------
// Searches.

OptimizationResult minimize_fidelity_problem(const FidelityProblem& problem, const OptimizerOptions& opts) {
  const BoxBounds bounds = problem.bounds();
  const int n_fix = opts.use_fixtures ? 2 : 0;
  const int n_seeds = static_cast<int>(opts.seeds.size());
  for (const auto& s : opts.seeds)
    if (s.size() != problem.n_vars()) throw std::invalid_argument("seed has the wrong number of variables");

  const RestartBody body = [&](int r, int attempt) {
    RestartOutcome out;
    out.record.index = r;
    Eigen::VectorXd x0;
    if (attempt == 0 && r < n_fix) {
      const FixtureKind kind = r == 0 ? FixtureKind::LowAlpha : FixtureKind::HighAlpha;
      const Fixture fx = appendix_fixture(kind, {problem.eps(), problem.alpha(), 2});
      x0 = problem.encode(fx.state, {fx.plus_vectors[0], fx.plus_vectors[1]}, fx.plan);
      out.record.origin = r == 0 ? "fixture:low-alpha" : "fixture:high-alpha";
    } else if (attempt == 0 && r < n_fix + n_seeds) {
      x0 = opts.seeds[r - n_fix];
      out.record.origin = "seed";
    } else {
      CounterRng rng(opts.seed, retry_stream(r, attempt));
      x0 = problem.random_start(rng);
      out.record.origin = "random";
    }
    const Objective f = [&](const Eigen::VectorXd& x) { return problem.objective(x); };
    const QuasiNewtonResult qn = minimize_box(f, x0, bounds, opts.qn);
    out.record.iterations = qn.iterations;
    out.record.status = to_string(qn.status);
    const ReconstructionResult check = problem.reconstruction(qn.x);
    out.record.ok = qn.usable() && check.converged && std::isfinite(qn.value);
    out.record.value = out.record.ok ? qn.value : kNaN;
    if (!check.converged) out.record.note = "inner reconstruction did not converge";
    out.x = qn.x;
    return out;
  };
  return run_pool(std::max(opts.restarts, 1), opts, body);
}

OptimizationResult minimize_fidelity(double eps, double alpha, const OptimizerOptions& opts) {
  return minimize_fidelity_problem(FidelityProblem(eps, alpha, PlanMode::Local, opts.mle), opts);
}

Eigen::VectorXd lift_to_correlated(const FidelityProblem& local, const Eigen::VectorXd& x) {
  if (local.mode() != PlanMode::Local) throw std::invalid_argument("lift_to_correlated expects a local problem");
  if (x.size() != local.n_vars()) throw std::invalid_argument("lift_to_correlated: wrong number of variables");
  const MeasurementPlan pauli = standard_pauli_plan(2);
  Eigen::VectorXd out(2 * 2 * 9 + 6);
  for (int j = 0; j < 2; ++j)
    for (int s = 0; s < 9; ++s) {
      const int src = 2 * (j * 3 + pauli.joint_tuple(s)[j]);
      out(2 * (j * 9 + s)) = x(src);
      out(2 * (j * 9 + s) + 1) = x(src + 1);
    }
  out.tail(6) = x.tail(6);
  return out;
}

OptimizationResult minimize_fidelity_correlated(double eps, double alpha, const OptimizerOptions& opts) {
  const FidelityProblem problem(eps, alpha, PlanMode::Correlated, opts.mle);
  if (!opts.seeds.empty()) return minimize_fidelity_problem(problem, opts);

  const FidelityProblem local_problem(eps, alpha, PlanMode::Local, opts.mle);
  const OptimizationResult local = minimize_fidelity_problem(local_problem, opts);
  OptimizerOptions lifted = opts;
  if (local.best_restart >= 0) lifted.seeds.push_back(lift_to_correlated(local_problem, local.argmin));
  return minimize_fidelity_problem(problem, lifted);
}

int witness_family(const WitnessSpec& spec) {
  auto same_shape = [](const WitnessSpec& a, const WitnessSpec& b) {
    if (a.n_parties() != b.n_parties() || a.terms().size() != b.terms().size() ||
        a.projector_terms().size() != b.projector_terms().size())
      return false;
    for (int j = 0; j < a.n_parties(); ++j) {
      if (a.intended()[j].size() != b.intended()[j].size()) return false;
      for (std::size_t k = 0; k < a.intended()[j].size(); ++k)
        if ((a.intended()[j][k] - b.intended()[j][k]).norm() > 1e-12) return false;
    }
    for (std::size_t t = 0; t < a.terms().size(); ++t)
      if (a.terms()[t].settings != b.terms()[t].settings || std::abs(a.terms()[t].coeff - b.terms()[t].coeff) > 1e-14)
        return false;
    for (std::size_t t = 0; t < a.projector_terms().size(); ++t) {
      const auto &x = a.projector_terms()[t], &y = b.projector_terms()[t];
      if (x.settings != y.settings || x.outcomes != y.outcomes || std::abs(x.coeff - y.coeff) > 1e-14) return false;
    }
    return true;
  };
  const int n = spec.n_parties();
  if (n == 2 && same_shape(spec, singlet_witness())) return 2;
  if (n >= 3 && n <= 12 && same_shape(spec, ghz_witness(n))) return n;
  return 0;
}

std::optional<double> known_correction(const WitnessSpec& spec, double eps) {
  const int fam = witness_family(spec);
  if (fam == 2) {
    if (!(eps < kPi / 2)) return std::nullopt;
    return singlet_correction_closed_form(eps) + (spec.identity_coeff() - singlet_witness().identity_coeff());
  }
  if (fam >= 4) {
    return ghz_correction_closed_form(fam, eps).value + (spec.identity_coeff() - ghz_witness(fam).identity_coeff());
  }
  return std::nullopt;
}

OptimizationResult minimize_witness(const WitnessSpec& spec, double eps, PlanMode mode, const OptimizerOptions& opts,
                                    bool deform_projector_settings) {
  const int n = spec.n_parties();
  const std::vector<unsigned> cuts = enumerate_bipartitions(n);

  // Known fixture on its own cut.
  std::optional<std::pair<unsigned, std::pair<PureState, MeasurementPlan>>> fixture;
  const int fam = witness_family(spec);
  if (opts.use_fixtures && fam == 2 && eps < kPi / 2) {
    fixture.emplace(1u, std::make_pair(singlet_fixture_state(), triad_plan(2, witness_closed_triad(std::min(eps, kPi / 2)))));
  } else if (opts.use_fixtures && fam >= 4) {
    const Parity parity = fam % 2 == 0 ? Parity::Even : Parity::Odd;
    const int first = parity == Parity::Even ? fam / 2 : (fam - 1) / 2;
    fixture.emplace((1u << first) - 1u, std::make_pair(biseparable_fixture(fam, parity), ghz_plan(fam, eps, parity)));
  }
  const int n_fix = fixture ? 1 : 0;
  const int n_seeds = static_cast<int>(opts.witness_seeds.size());

  const RestartBody body = [&](int r, int attempt) {
    RestartOutcome out;
    out.record.index = r;
    unsigned mask;
    Eigen::VectorXd x0;
    std::optional<WitnessProblem> problem;
    if (attempt == 0 && r < n_fix) {
      mask = fixture->first;
      problem.emplace(spec, eps, mode, mask, deform_projector_settings);
      x0 = problem->encode(fixture->second.first, fixture->second.second);
      out.record.origin = "fixture";
    } else if (attempt == 0 && r < n_fix + n_seeds) {
      mask = opts.witness_seeds[r - n_fix].first;
      problem.emplace(spec, eps, mode, mask, deform_projector_settings);
      x0 = opts.witness_seeds[r - n_fix].second;
      if (x0.size() != problem->n_vars()) throw std::invalid_argument("witness seed has the wrong size");
      out.record.origin = "seed";
    } else {
      mask = cuts[static_cast<std::size_t>(r) % cuts.size()];
      problem.emplace(spec, eps, mode, mask, deform_projector_settings);
      CounterRng rng(opts.seed, retry_stream(r, attempt));
      x0 = problem->random_start(rng);
      out.record.origin = "random";
    }
    const Objective v = [&](const Eigen::VectorXd& x) { return problem->objective(x); };
    const ObjectiveWithGradient f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return problem->objective(x, g); };
    const QuasiNewtonResult qn = minimize_box(v, f, x0, problem->bounds(), opts.qn);
    out.record.iterations = qn.iterations;
    out.record.status = to_string(qn.status);
    out.record.ok = qn.usable() && std::isfinite(qn.value);
    out.record.value = out.record.ok ? qn.value : kNaN;
    out.x = qn.x;
    out.mask = mask;
    return out;
  };
  return run_pool(std::max(opts.restarts, 1), opts, body);
}

std::vector<SusceptibilityRow> susceptibility_curve(const std::vector<double>& alphas, double eps_probe,
                                                    const OptimizerOptions& opts) {
  if (alphas.empty()) throw std::invalid_argument("susceptibility_curve needs a non-empty grid");
  if (!(eps_probe > 0.0)) throw std::invalid_argument("susceptibility probe must be positive");
  std::vector<SusceptibilityRow> rows;
  for (double a : alphas) {
    const OptimizationResult r = minimize_fidelity(eps_probe, a, opts);
    rows.push_back({a, std::sin(2 * a), r.best_value, (r.best_value - 1.0) / eps_probe, r.failed_restarts});
  }
  return rows;
}

std::vector<CorrectionRow> correction_curve(const WitnessSpec& spec, const std::vector<double>& eps_grid, PlanMode mode,
                                            const OptimizerOptions& opts) {
  if (eps_grid.empty()) throw std::invalid_argument("correction_curve needs a non-empty grid");
  std::vector<CorrectionRow> rows;
  std::optional<std::pair<double, OptimizationResult>> previous;
  for (double eps : eps_grid) {
    OptimizerOptions o = opts;
    // The previous grid point's optimum stays feasible for a larger budget.
    if (previous && previous->second.best_restart >= 0 && previous->first > 0.0 && eps >= previous->first) {
      Eigen::VectorXd x = previous->second.argmin;
      const WitnessProblem probe(spec, eps, mode, previous->second.bipartition_mask);
      const double ratio = eps > 0.0 ? previous->first / eps : 0.0;
      for (int i = 0; i < probe.n_plan_vars(); i += 2) x(i) *= ratio;
      o.witness_seeds.emplace_back(previous->second.bipartition_mask, x);
    }
    const OptimizationResult r = minimize_witness(spec, eps, mode, o);
    rows.push_back({eps, known_correction(spec, eps), r.best_value, r.failed_restarts});
    previous.emplace(eps, r);
  }
  return rows;
}

}  // namespace misalign
