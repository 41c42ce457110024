#include "doctest.h"

#include <cmath>
#include <numbers>

#include "aqml/error.hpp"
#include "aqml/statevec.hpp"

using namespace aqml;
using namespace aqml::qsim;

namespace {
constexpr double kPi = std::numbers::pi;

RVector random_unit(int n, Rng& rng) {
  RVector v(n);
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v.normalized();
}
}  // namespace

TEST_CASE("gate truth tables") {
  auto r = QuantumRegister(1);
  r.apply(gates::x(), {0});
  CHECK(std::abs(r.state()(1)) == doctest::Approx(1.0));

  auto c = QuantumRegister::basis(2, 0b10);
  c.apply(gates::x(), {1}, {0});
  CHECK(std::abs(c.state()(0b11)) == doctest::Approx(1.0));

  auto h = QuantumRegister(1);
  h.apply(gates::h(), {0});
  h.apply(gates::h(), {0});
  CHECK(std::abs(h.state()(0) - Complex(1, 0)) <= 1e-15);

  // Targets order: targets[0] is the MSB of the gate index.
  auto s = QuantumRegister::basis(3, 0b100);
  s.apply(gates::swap(), {0, 2});
  CHECK(std::abs(s.state()(0b001)) == doctest::Approx(1.0));
}

TEST_CASE("apply rejects bad input") {
  QuantumRegister r(2);
  CHECK_THROWS_AS(r.apply(gates::x(), {0}, {0}), Error);
  CHECK_THROWS_AS(r.apply(gates::swap(), {0}), Error);
  CHECK_THROWS_AS(r.apply(gates::x(), {2}), Error);
  CHECK_THROWS_AS(QuantumRegister(kMaxQubits + 1), Error);
}

TEST_CASE("norm preservation under random gate sequences") {
  Rng rng = make_rng(10, "sv-norm");
  QuantumRegister r(5);
  for (int step = 0; step < 200; ++step) {
    const int t = static_cast<int>(uniform(rng, 0, 5));
    int c = static_cast<int>(uniform(rng, 0, 5));
    const double th = uniform(rng, -kPi, kPi);
    CMatrix g = (step % 3 == 0) ? gates::h() : (step % 3 == 1 ? gates::ry(th) : gates::rz(th));
    if (c == t)
      r.apply(g, {t});
    else
      r.apply(g, {t}, {c});
    CHECK(std::abs(r.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("hadamard test examples") {
  std::vector<RVector> vs;
  RVector e2 = RVector::Zero(4);
  e2(2) = 1.0;
  vs.push_back(e2);
  RVector v(4);
  v << 0.36, std::sqrt(1 - 0.36 * 0.36), 0, 0;
  vs.push_back(v);
  const auto prep = PrepOracle::from_vectors(vs);
  CHECK(hadamard_test(prep, 0, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hadamard_test(prep, 0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hadamard_test(prep, 1, 0) == doctest::Approx(0.68).epsilon(1e-12));

  std::vector<CVector> complex_vs{CVector::Unit(2, 0) * Complex(0, 1)};
  CHECK_THROWS_AS(PrepOracle::from_vectors(complex_vs), Error);
}

TEST_CASE("hadamard test identity on random real vectors") {
  Rng rng = make_rng(11, "sv-hadamard");
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 2 + static_cast<int>(uniform(rng, 0, 6));
    std::vector<RVector> vs;
    for (int j = 0; j < 3; ++j) vs.push_back(random_unit(dim, rng));
    const auto prep = PrepOracle::from_vectors(vs);
    CHECK(linalg::is_unitary(prep.unitary, 1e-12));
    for (int j = 0; j < 3; ++j) {
      const auto k = static_cast<std::uint64_t>(uniform(rng, 0, dim));
      const double want = (1.0 + vs[static_cast<size_t>(j)](static_cast<Eigen::Index>(k))) / 2.0;
      CHECK(std::abs(hadamard_test(prep, j, k) - want) <= 1e-10);
    }
  }
}

TEST_CASE("contract amplitude estimation") {
  Rng rng = make_rng(12, "sv-ae");
  for (int i = 0; i < 1000; ++i) {
    const auto a = amplitude_estimate(0.5, 0.01, 0.0, rng);
    CHECK(a.value >= 0.49);
    CHECK(a.value <= 0.51);
  }
  const auto z = amplitude_estimate(0.0, 0.05, 0.0, rng);
  CHECK(z.value <= 0.05);
  CHECK(amplitude_estimation_charge(0.1, 0.1, 8.0) == 800);
  CHECK(amplitude_estimation_charge(0.1, 0.0, 8.0) == 80);

  int failures = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i)
    if (!amplitude_estimate(0.3, 0.05, 0.1, rng, FailureMode::worst_case).success) ++failures;
  const double rate = static_cast<double>(failures) / trials;
  CHECK(rate <= 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / trials));

  CHECK_THROWS_AS(amplitude_estimate(1.2, 0.1, 0.1, rng), Error);
  CHECK_THROWS_AS(amplitude_estimate(0.2, 0.0, 0.1, rng), Error);
}

TEST_CASE("circuit amplitude estimation meets the contract") {
  const double eps0 = 0.1, delta0 = 0.2;
  CircuitAmplitudeEstimator est{amplitude_estimation_bits(eps0, delta0)};
  CHECK(est.bits + 1 <= 10);
  for (double p : {0.0, 0.1, 0.37, 0.5, 0.81, 1.0}) {
    double bad = 0.0, total = 0.0;
    for (const auto& [v, w] : est.distribution(p)) {
      total += w;
      if (std::abs(v - p) > eps0) bad += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(bad <= delta0);
  }
}

TEST_CASE("phase estimation examples") {
  CMatrix u = CMatrix::Identity(2, 2);
  u(1, 1) = std::polar(1.0, 2 * kPi * 0.25);
  auto p = phase_distribution(u, CVector::Unit(2, 1), 2);
  CHECK(p[1] == doctest::Approx(1.0).epsilon(1e-12));

  auto id = phase_distribution(CMatrix::Identity(4, 4), CVector::Unit(4, 3), 3);
  CHECK(id[0] == doctest::Approx(1.0).epsilon(1e-12));

  u(1, 1) = std::polar(1.0, 2 * kPi * 0.3);
  auto q = phase_distribution(u, CVector::Unit(2, 1), 4);
  const auto fejer = fejer_distribution(0.3, 4);
  size_t mode = 0;
  for (size_t y = 0; y < q.size(); ++y) {
    CHECK(std::abs(q[y] - fejer[y]) <= 1e-10);
    if (q[y] > q[mode]) mode = y;
  }
  CHECK(mode == 5);
}

TEST_CASE("phase estimation is linear over eigencomponents") {
  Rng rng = make_rng(13, "sv-qpe");
  const std::vector<double> phases{0.11, 0.47, 0.73, 0.9};
  CMatrix u = CMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) u(i, i) = std::polar(1.0, 2 * kPi * phases[static_cast<size_t>(i)]);
  CVector a(4);
  for (int i = 0; i < 4; ++i) a(i) = Complex(normal(rng), normal(rng));
  a.normalize();
  const auto got = phase_distribution(u, a, 5);
  std::vector<double> want(32, 0.0);
  for (int i = 0; i < 4; ++i) {
    const auto f = fejer_distribution(phases[static_cast<size_t>(i)], 5);
    for (size_t y = 0; y < 32; ++y) want[y] += std::norm(a(i)) * f[y];
  }
  for (size_t y = 0; y < 32; ++y) CHECK(std::abs(got[y] - want[y]) <= 1e-10);

  const auto res = phase_estimate(u, QuantumRegister::from_state(a), 5, 1000, rng);
  int total = 0;
  for (const auto& [ph, m] : res.samples) {
    total += m;
    CHECK(ph * 32 == doctest::Approx(std::round(ph * 32)));
  }
  CHECK(total == 1000);
}

TEST_CASE("eigenvalue wrap convention") {
  CHECK(eigenvalue_from_phase(0.0) == 0.0);
  CHECK(eigenvalue_from_phase(0.25) == doctest::Approx(-kPi / 2));
  CHECK(eigenvalue_from_phase(0.75) == doctest::Approx(kPi / 2));
  CHECK(eigenvalue_from_phase(0.5) == doctest::Approx(kPi));
}
