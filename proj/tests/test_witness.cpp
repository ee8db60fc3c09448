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

#include <bit>

#include <Eigen/SVD>

#include "misalign/rng.hpp"
#include "misalign/sampling.hpp"
#include "misalign/witness.hpp"
#include "oracles.hpp"
#include "witness_reference.hpp"

using namespace misalign;
using doctest::Approx;
using oracle::deg;

namespace {

using oracle::amplitudes;
using oracle::reference_observable;

CVector ghz(int n) {
  CVector v = CVector::Zero(1 << n);
  v(0) = v((1 << n) - 1) = 1.0 / std::sqrt(2.0);
  return v;
}

/// |a>_S (x) |b>_rest for a bipartition mask (bit p set: party p in S).
CVector biseparable(int n, unsigned mask, const CVector& a, const CVector& b) {
  CVector out(1 << n);
  for (int idx = 0; idx < (1 << n); ++idx) {
    int ia = 0, ib = 0;
    for (int p = 0; p < n; ++p) {
      const int bit = (idx >> (n - 1 - p)) & 1;
      if (mask >> p & 1u) ia = 2 * ia + bit;
      else ib = 2 * ib + bit;
    }
    out(idx) = a(ia) * b(ib);
  }
  return out;
}

}  // namespace

TEST_CASE("singlet witness values") {
  const WitnessSpec w = singlet_witness();
  CVector singlet = CVector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK(w.value(PureState(singlet).density().matrix()) == Approx(-0.5).epsilon(1e-14));
  CHECK(w.value(CMatrix::Identity(4, 4) / 4.0) == Approx(0.25).epsilon(1e-14));
  CHECK(w.value(PureState::basis(2, 0).density().matrix()) == Approx(0.5).epsilon(1e-14));
  const CMatrix alt = 0.5 * CMatrix::Identity(4, 4) - singlet * singlet.adjoint();
  CHECK((w.observable() - alt).norm() < 1e-12);
}

TEST_CASE("GHZ witness values and decomposition") {
  for (int n = 3; n <= 8; ++n) {
    const WitnessSpec w = ghz_witness(n);
    const CVector g = ghz(n);
    CHECK(w.value(g * g.adjoint()) == Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(w.value(PureState::basis(n, 0).density().matrix())) < 1e-12);
    const CMatrix alt = 0.5 * CMatrix::Identity(1 << n, 1 << n) - g * g.adjoint();
    CHECK((w.observable() - alt).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(ghz_witness(2), std::invalid_argument);
}

TEST_CASE("decomposition matches the observable on random states") {
  CounterRng rng(31, 0);
  for (int n = 3; n <= 5; ++n) {
    const WitnessSpec w = ghz_witness(n);
    const CVector g = ghz(n);
    const CMatrix alt = 0.5 * CMatrix::Identity(1 << n, 1 << n) - g * g.adjoint();
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const CMatrix rho = random_pure_state(n, rng).density().matrix();
      worst = std::max(worst, std::abs(w.value(rho) - expectation(alt, rho)));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("effective witness reduces to the observable without deviation") {
  for (const WitnessSpec& w : {singlet_witness(), ghz_witness(4), ghz_witness(5)})
    CHECK((effective_witness(w, w.ideal_plan()) - w.observable()).norm() < 1e-13);
}

TEST_CASE("effective witness matches the reference assembly") {
  CounterRng rng(32, 0);
  for (const WitnessSpec& w : {singlet_witness(), ghz_witness(3), ghz_witness(4)}) {
    const MeasurementPlan plan = random_misaligned_plan(w.ideal_plan(), deg(8), rng);
    const oracle::Dense ref = reference_observable(w, plan);
    const CMatrix got = effective_witness(w, plan);
    double worst = 0.0;
    for (int i = 0; i < ref.d; ++i)
      for (int j = 0; j < ref.d; ++j) worst = std::max(worst, std::abs(got(i, j) - ref(i, j)));
    CHECK(worst < 1e-13);
    const PureState psi = random_pure_state(w.n_parties(), rng);
    CHECK(effective_value(w, plan, psi.amplitudes()) ==
          Approx(oracle::braket(amplitudes(psi.amplitudes()), ref)).epsilon(1e-12));
  }
}

TEST_CASE("singlet closed form") {
  CHECK(singlet_correction_closed_form(0.0) == 0.0);
  CHECK(singlet_correction_closed_form(deg(2)) == Approx(-0.02498).epsilon(1e-3));
  const WitnessSpec w = singlet_witness();
  const auto psi = amplitudes(singlet_fixture_state().amplitudes());
  for (int k = 0; k <= 10; ++k) {
    const double e = deg(k);
    const auto t = oracle::closed_triad(e);
    const double direct = oracle::singlet_witness_value(psi, t, t);
    CHECK(std::abs(direct - oracle::singlet_correction(e)) < 1e-12);
    CHECK(std::abs(singlet_correction_closed_form(e) - direct) < 1e-12);
    CHECK(std::abs(effective_value(w, triad_plan(2, witness_closed_triad(e)), singlet_fixture_state().amplitudes()) -
                   direct) < 1e-12);
    if (k > 0) CHECK(singlet_correction_closed_form(e) < 0.0);
  }
}

TEST_CASE("GHZ closed forms against direct expectations on the fixtures") {
  CHECK(ghz_correction_closed_form(4, oracle::pi / 8).value == Approx(-0.25).epsilon(1e-14));
  CHECK(ghz_correction_closed_form(6, deg(2)).value == Approx(-0.05198).epsilon(1e-4));
  CHECK(ghz_correction_closed_form(5, 0.0).value == Approx(0.0).epsilon(1e-15));
  CHECK_THROWS_AS(ghz_correction_closed_form(3, deg(1)), NoClosedForm);
  for (int n = 4; n <= 7; ++n) {
    const Parity parity = n % 2 ? Parity::Odd : Parity::Even;
    const WitnessSpec w = ghz_witness(n);
    const auto psi = amplitudes(biseparable_fixture(n, parity).amplitudes());
    for (int k = 0; k <= 10; ++k) {
      const double e = deg(k);
      const BoundValue cf = ghz_correction_closed_form(n, e);
      const double direct = oracle::braket(psi, reference_observable(w, ghz_plan(n, e, parity)));
      if (n % 2 == 0) CHECK(std::abs(-std::sin(n * e) / 4 - direct) < 1e-10);
      CHECK(std::abs(cf.value - direct) < 1e-10);
      CHECK(cf.in_validated_range == (e <= oracle::pi / (2 * n)));
    }
  }
}

TEST_CASE("four-party fixture amplitudes") {
  const CVector v = biseparable_fixture(4, Parity::Even).amplitudes();
  const oracle::c64 eplus = std::polar(0.5, oracle::pi / 4), eminus = std::polar(0.5, -oracle::pi / 4);
  CHECK(std::abs(v(0b0000) - 0.5) < 1e-15);
  CHECK(std::abs(v(0b0011) - eminus) < 1e-15);
  CHECK(std::abs(v(0b1100) - eplus) < 1e-15);
  CHECK(std::abs(v(0b1111) - 0.5) < 1e-15);
  CHECK(v.norm() == Approx(1.0).epsilon(1e-15));
  const auto a = amplitudes(v);
  CHECK(std::abs(oracle::ghz_overlap(a)) == Approx(std::abs(ghz(4).dot(v))).epsilon(1e-14));
  CHECK_THROWS(biseparable_fixture(4, Parity::Odd));
}

TEST_CASE("fixtures are products across their cut") {
  for (int n = 4; n <= 7; ++n) {
    const CVector v = biseparable_fixture(n, n % 2 ? Parity::Odd : Parity::Even).amplitudes();
    const int left = n / 2;
    const Eigen::Map<const Eigen::Matrix<oracle::c64, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
        v.data(), 1 << left, 1 << (n - left));
    const CMatrix dense = m;
    Eigen::JacobiSVD<CMatrix> svd(dense);
    CHECK(svd.singularValues()(1) < 1e-14);
  }
}

TEST_CASE("shift") {
  const WitnessSpec w = singlet_witness();
  const WitnessSpec same = shift_witness(w, 0.0);
  CHECK((same.observable() - w.observable()).norm() == 0.0);
  const double c = singlet_correction_closed_form(deg(2));
  const WitnessSpec shifted = shift_witness(w, c);
  const CMatrix mixed = CMatrix::Identity(4, 4) / 4.0;
  CHECK(shifted.value(mixed) == Approx(w.value(mixed) - c).epsilon(1e-14));
  CHECK(effective_value(shifted, triad_plan(2, witness_closed_triad(deg(2))), singlet_fixture_state().amplitudes()) >= -1e-12);
  CHECK_THROWS_AS(shift_witness(w, 0.1), std::invalid_argument);
  for (int n = 4; n <= 7; ++n) {
    const Parity parity = n % 2 ? Parity::Odd : Parity::Even;
    for (int k = 1; k <= 10; ++k) {
      const double e = deg(k);
      const WitnessSpec s = shift_witness(ghz_witness(n), ghz_correction_closed_form(n, e).value);
      CHECK(effective_value(s, ghz_plan(n, e, parity), biseparable_fixture(n, parity).amplitudes()) >= -1e-10);
    }
  }
}

TEST_CASE("witness property at zero misalignment") {
  CounterRng rng(33, 0);
  const WitnessSpec singlet = singlet_witness();
  double worst = 1.0;
  for (int i = 0; i < 1000; ++i) worst = std::min(worst, singlet.value(random_product_state(2, rng).density().matrix()));
  CHECK(worst >= -1e-10);

  for (int n = 3; n <= 5; ++n) {
    const WitnessSpec w = ghz_witness(n);
    double low = 1.0;
    for (int i = 0; i < 1000; ++i) {
      const unsigned mask = 1u + static_cast<unsigned>(rng.uniform() * ((1u << (n - 1)) - 1));
      const int size = std::popcount(mask);
      const CVector a = random_pure_state(size, rng).amplitudes();
      const CVector b = random_pure_state(n - size, rng).amplitudes();
      const CVector psi = biseparable(n, mask, a, b);
      low = std::min(low, w.value(psi * psi.adjoint()));
    }
    CHECK(low >= -1e-10);
  }
}

TEST_CASE("malformed specs are rejected") {
  const auto intended = standard_pauli_plan(2).intended_table();
  CHECK_THROWS_AS(WitnessSpec(intended, {{1.0, {0}}}, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(WitnessSpec(intended, {{1.0, {0, 3}}}, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(WitnessSpec(intended, {}, {{1.0, {0, 0}, {1, 2}}}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(effective_witness(singlet_witness(), standard_pauli_plan(3)), std::invalid_argument);
}
