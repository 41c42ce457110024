#include "doctest.h"

#include <cmath>

#include "aqml/error.hpp"
#include "aqml/kmeans.hpp"

using namespace aqml;
using namespace aqml::kmeans;
using linalg::CMatrix;

namespace {

RVector vec2(double a, double b) {
  RVector v(2);
  v << a, b;
  return v;
}

std::vector<RVector> ring(int n, double r) {
  std::vector<RVector> c;
  for (int b = 0; b < n; ++b) c.push_back(vec2(r * std::cos(2 * M_PI * b / n), r * std::sin(2 * M_PI * b / n)));
  return c;
}

std::vector<RVector> scaled(std::vector<RVector> v, double s) {
  for (auto& x : v) x *= s;
  return v;
}

CMatrix random_density(int q, int rank, Rng& rng) {
  const int dim = 1 << q;
  CMatrix a(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = linalg::Complex(normal(rng), normal(rng));
  CMatrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

}  // namespace

TEST_CASE("GHZ phase channel") {
  CHECK(ghz_phase_channel({0.1, -0.1, 0.0}, 3.0) == 1.0);
  CHECK(ghz_phase_channel({M_PI / 4, M_PI / 4}, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(ghz_phase_channel({2.0, 1.5}, 1.0), Error);
  CHECK_THROWS_AS(ghz_phase_channel({0.5}, 8.0), Error);

  Rng rng = make_rng(70, "kmeans-ghz");
  for (int n = 1; n <= 10; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> th;
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += th.emplace_back(uniform(rng, -1.0, 1.0) / n);
      const double t = std::ldexp(1.0, rep);
      const double sv = ghz_statevector_probability(th, t);
      CHECK(std::abs(sv - readout_probability(sum, t, false)) < 1e-12);
      CHECK(std::abs(ghz_statevector_probability(th, t, true) - readout_probability(sum, t, true)) < 1e-12);
      if (std::abs(sum * t) < M_PI) CHECK(std::abs(sv - ghz_phase_channel(th, t)) < 1e-12);
    }
  }
  // Accumulation order does not change the readout.
  std::vector<double> th{0.01, -0.03, 0.05, 0.02, -0.04, 0.015};
  const double fwd = ghz_statevector_probability(th, 4.0);
  std::reverse(th.begin(), th.end());
  CHECK(std::abs(ghz_statevector_probability(th, 4.0) - fwd) < 1e-14);
}

TEST_CASE("phase schedule and rotation budgets") {
  PhaseSchedule s;
  for (double tau : {0.3, 0.1, 0.05, 0.02, 0.01, 0.003, 0.001}) {
    const int L = s.levels(tau);
    CHECK(std::ldexp(1.0, L) - 1.0 <= s.c / tau);
    CHECK(static_cast<double>(s.repetitions(tau)) <= s.effective_constant() / tau);
  }

  const auto b = rotation_budget(1, 2, 0.1, 0.5, 1.0, 1.0);
  CHECK(b.q1 == 10);
  CHECK(b.q2 == 40);
  CHECK(rotation_budget(1, 0, 0.1, 0.5, 1.0, 1.0).q2 == 0);
  const auto half = rotation_budget(3, 2, 0.2, 0.5, 1.0, 1.0);
  const auto full = rotation_budget(3, 2, 0.1, 0.5, 1.0, 1.0);
  CHECK(half.q1 * 2 == full.q1);
  CHECK(half.q2 * 2 == full.q2);
  CHECK(full.q1_rounds.size() == 3);
  CHECK_THROWS_AS(rotation_budget(1, 2, 0.1, 0.1, 1.0, 1.0), Error);

  ProtocolConfig cfg;
  cfg.epsilon = 0.05;
  const auto sb = rotation_budget(cfg, 2, 0.4);
  CHECK(sb.q1 == 2 * (s.repetitions(0.025) + s.repetitions(0.05 * 0.375 / 4)));
  CHECK(sb.q2 == 2 * 2 * s.repetitions(0.05 * 0.375 / 4));
  CHECK_THROWS_AS(rotation_budget(cfg, 1, 0.05), Error);
}

TEST_CASE("ladder phase estimation") {
  Rng rng = make_rng(71, "kmeans-phase");
  PhaseSchedule s;
  int within = 0, total = 0;
  double worst = 0.0;
  for (double tau : {0.05, 0.01, 0.002}) {
    for (int t = 0; t < 400; ++t) {
      const double phi = uniform(rng, -1.0, 1.0);
      const auto e = estimate_phase(phi, tau, s, rng);
      worst = std::max(worst, std::abs(e.value - phi) / tau);
      within += std::abs(e.value - phi) <= tau;
      ++total;
      CHECK(e.repetitions == s.repetitions(tau));
    }
  }
  CHECK(within == total);
  CHECK(worst < 0.5);

  // Random phases on every shot destroy the readout.
  double spread = 0.0;
  for (int t = 0; t < 50; ++t) spread = std::max(spread, std::abs(estimate_phase(0.3, 0.01, s, rng, true).value - 0.3));
  CHECK(spread > 0.5);
}

TEST_CASE("assignment ties and the classical oracle") {
  const std::vector<RVector> c{vec2(1.0, 0.0), vec2(-1.0, 0.0)};
  std::vector<RVector> rows(200, vec2(0.0, 0.3));
  const auto ps = ingest(rows);
  const auto a = classical_iteration(ps, c, 5, 0);
  const auto b = classical_iteration(ps, c, 5, 0);
  CHECK(a.assignment == b.assignment);
  int left = 0;
  for (int x : a.assignment) left += x == 1;
  CHECK(left > 60);
  CHECK(left < 140);
  CHECK(a.probability[0] + a.probability[1] == doctest::Approx(1.0));

  const auto clamped = ingest({vec2(3.0, -2.0)});
  CHECK(clamped[0].x(0) == 1.0);
  CHECK(clamped[0].x(1) == -1.0);
  CHECK_THROWS_AS(ingest({vec2(NAN, 0.0)}), Error);
}

TEST_CASE("protocol round examples") {
  Rng rng = make_rng(72, "kmeans-round");
  ProtocolConfig cfg;
  cfg.k = 1;
  cfg.epsilon = 0.05;
  const auto same = ingest(std::vector<RVector>(1000, vec2(1.0, 0.0)));
  const auto r1 = run_round(same, {vec2(0.2, 0.2)}, cfg, 0, rng);
  CHECK_FALSE(r1.aborted);
  CHECK(std::abs(r1.p_hat[0] - 1.0) <= cfg.epsilon);
  CHECK(max_abs_diff(r1.centroids, {vec2(1.0, 0.0)}) <= cfg.epsilon);

  cfg.k = 2;
  std::vector<RVector> rows;
  for (int j = 0; j < 2000; ++j) rows.push_back(vec2(j % 2 ? 0.8 : -0.8, 0.0));
  const auto pm = ingest(rows);
  const auto r2 = run_round(pm, {vec2(1.0, 0.0), vec2(-1.0, 0.0)}, cfg, 0, rng);
  CHECK(std::abs(r2.p_hat[0] - 0.5) <= cfg.epsilon);
  CHECK(std::abs(r2.p_hat[1] - 0.5) <= cfg.epsilon);
  CHECK(max_abs_diff(r2.centroids, {vec2(0.8, 0.0), vec2(-0.8, 0.0)}) <= cfg.epsilon);
  CHECK(r2.q2 > 0);
  CHECK(r2.q1 > 0);

  std::vector<bool> none(rows.size(), false);
  const auto r3 = run_round(ingest(rows, none), {vec2(1.0, 0.0), vec2(-1.0, 0.0)}, cfg, 0, rng);
  CHECK(r3.aborted);
  for (double p : r3.p_hat) CHECK(p <= cfg.epsilon);

  // Partial participation: the estimated fractions sum to at most the
  // participating fraction (up to the readout precision).
  std::vector<bool> some(rows.size());
  for (size_t j = 0; j < some.size(); ++j) some[j] = j % 5 < 3;
  const auto r4 = run_round(ingest(rows, some), {vec2(1.0, 0.0), vec2(-1.0, 0.0)}, cfg, 0, rng);
  CHECK(r4.p_hat[0] + r4.p_hat[1] <= 0.6 + cfg.epsilon);
  CHECK(max_abs_diff(r4.centroids, r4.exact.centroids) <= cfg.epsilon);

  // Empty cluster: reseeded, flagged.
  const auto r5 = run_round(pm, {vec2(1.0, 0.0), vec2(-1.0, 0.0), vec2(0.0, 1.0)},
                            [&] { auto c = cfg; c.k = 3; return c; }(), 0, rng);
  CHECK(r5.reseeded[2]);
  CHECK_FALSE(r5.reseeded[0]);

  // A budget too small for the round aborts before any readout.
  const auto r6 = run_round(pm, {vec2(1.0, 0.0), vec2(-1.0, 0.0)}, cfg, 0, rng, 10);
  CHECK(r6.aborted);
  CHECK(r6.q1 == 0);
}

TEST_CASE("ratio error propagation") {
  for (double P = 0.02; P <= 1.0; P += 0.01)
    for (double e : {0.001, 0.005, 0.01}) {
      if (!(P > e)) continue;
      CHECK(std::abs(1.0 / P - 1.0 / (P + e)) <= e / (P * P));
    }
}

TEST_CASE("centroid accuracy over the epsilon grid") {
  for (int nb : {2, 3}) {
    std::vector<double> mean_err;
    for (double eps : {0.1, 0.05, 0.02}) {
      double sum = 0.0;
      for (int trial = 0; trial < 10; ++trial) {
        Rng rng = make_rng(73, "kmeans-grid", static_cast<std::uint64_t>(nb * 1000 + trial));
        const auto centers = ring(nb, 0.6);
        const auto ps = blobs(centers, 10000, 0.15, rng);
        ProtocolConfig cfg;
        cfg.k = nb;
        cfg.epsilon = eps;
        const auto r = run_round(ps, scaled(centers, 0.8), cfg, 0, rng);
        const double err = max_abs_diff(r.centroids, r.exact.centroids);
        CHECK(err <= eps);
        sum += err;
      }
      mean_err.push_back(sum / 10);
    }
    CHECK(mean_err[0] > mean_err[1]);
    CHECK(mean_err[1] > mean_err[2]);
  }
}

TEST_CASE("protocol runs") {
  Rng rng = make_rng(74, "kmeans-protocol");
  const auto centers = ring(2, 0.6);
  const auto ps = blobs(centers, 4000, 0.1, rng);
  ProtocolConfig cfg;
  cfg.k = 2;
  cfg.epsilon = 0.05;
  cfg.converge_tol = 0.01;
  const std::vector<RVector> init{vec2(0.2, 0.3), vec2(-0.1, -0.4)};
  const auto res = run_protocol(ps, cfg, init, rng);
  CHECK(res.converged);
  CHECK_FALSE(res.budget_exhausted);
  const auto fixed = lloyd(ps, init, cfg.seed);
  CHECK(max_abs_diff(res.trajectory.back(), fixed) <= 2 * cfg.epsilon);
  CHECK(res.budget.q1_rounds.size() == res.rounds.size());
  CHECK(res.privacy.q_total == res.budget.total());

  cfg.k = 1;
  const auto one = run_protocol(ps, [&] { auto c = cfg; c.max_rounds = 1; return c; }(), {vec2(0.0, 0.0)}, rng);
  RVector mean = RVector::Zero(2);
  for (const auto& p : ps) mean += p.x / static_cast<double>(ps.size());
  CHECK(max_abs_diff(one.trajectory.back(), {mean}) <= cfg.epsilon);

  cfg.privacy_delta = 0.0;
  const auto zero = run_protocol(ps, cfg, {vec2(0.0, 0.0)}, rng);
  CHECK(zero.trajectory.size() == 1);
  CHECK(zero.budget.total() == 0);
  CHECK(zero.budget_exhausted);

  // A cap that admits the first round but not a second one; the population
  // has to exceed the rotation count for the cap to be meaningful.
  cfg.k = 2;
  cfg.epsilon = 0.1;
  const auto big = blobs(centers, 400000, 0.1, rng);
  const auto first = run_round(big, init, cfg, 0, rng);
  const double allowed = 1.3 * static_cast<double>(first.q1 + first.q2);
  cfg.privacy_delta = 0.5 * std::sin(allowed / (2.0 * big.size()));
  const auto partial = run_protocol(big, cfg, init, rng);
  CHECK(partial.budget_exhausted);
  CHECK(partial.trajectory.size() >= 2);
  CHECK(partial.privacy.p_opt_closed_form - 0.5 <= cfg.privacy_delta + 1e-12);
}

TEST_CASE("privacy analysis") {
  RotationBudget none;
  const auto np = privacy_analysis(none, 100);
  CHECK(np.p_opt_exact == 0.5);
  CHECK(np.p_opt_closed_form == 0.5);

  RotationBudget b10;
  b10.add_round(4, 6);
  const auto r = privacy_analysis(b10, 100);
  CHECK(r.exact_computed);
  CHECK(r.p_opt_closed_form == doctest::Approx(0.5 + 0.5 * std::sin(0.05)).epsilon(1e-15));
  CHECK(r.p_opt_closed_form == doctest::Approx(0.52498).epsilon(1e-5));
  CHECK(std::abs(r.p_opt_exact - r.p_opt_closed_form) < 1e-9);

  for (int q = 1; q <= 8; ++q)
    for (int N : {q + 1, 3 * q, 50, 1000}) {
      RotationBudget b;
      b.add_round(static_cast<std::uint64_t>(q), 0);
      const auto p = privacy_analysis(b, N);
      CHECK(std::abs(p.p_opt_exact - p.p_opt_closed_form) < 1e-9);
      CHECK(p.p_opt_exact - 0.5 <= p.bound + 1e-12);
      CHECK(p.p_opt_exact - 0.5 <= p.series_bound + 1e-12);
    }

  // No probe beats the closed-form optimum.
  Rng rng = make_rng(75, "kmeans-privacy");
  for (int t = 0; t < 40; ++t) {
    const int q = 1 + t % 5;
    const int N = q + 1 + t;
    const double best = 0.5 + 0.5 * std::sin(static_cast<double>(q) / (2.0 * N));
    CHECK(distinguishing_probability(random_density(q, 1 + t % 3, rng), q, N) <= best + 1e-12);
  }

  // Monotone in q at fixed N, in N at fixed q; O(q/N) envelope.
  double prev = 0.5;
  for (int q = 1; q < 100; q += 7) {
    RotationBudget b;
    b.add_round(static_cast<std::uint64_t>(q), 0);
    const double p = privacy_analysis(b, 100, 0).p_opt_closed_form;
    CHECK(p >= prev);
    prev = p;
  }
  prev = 1.0;
  for (int N = 11; N < 2000; N += 97) {
    RotationBudget b;
    b.add_round(10, 0);
    const double p = privacy_analysis(b, N, 0).p_opt_closed_form;
    CHECK(p <= prev);
    prev = p;
  }
  for (double ratio : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
    const int N = 10000;
    RotationBudget b;
    b.add_round(static_cast<std::uint64_t>(ratio * N), 0);
    const double excess = privacy_analysis(b, N, 0).p_opt_closed_form - 0.5;
    CHECK(excess <= ratio / 2.0);
    CHECK(excess >= 0.2 * ratio);
  }

  RotationBudget big;
  big.add_round(60, 40);
  CHECK_THROWS_AS(privacy_analysis(big, 100), Error);
  CHECK(rotation_cap(0.0, 100) == 0);
  CHECK(rotation_cap(0.6, 100) == UINT64_MAX);
}

TEST_CASE("required population") {
  CHECK(required_population(1, 1, 1, 0.1, 0.1) == doctest::Approx(100.0));
  CHECK(required_population(2, 1, 1, 0.1, 0.1) == doctest::Approx(200.0));
  CHECK(required_population(1, 3, 2, 0.1, 0.1, 2.0) == doctest::Approx(1200.0));
  CHECK_THROWS_AS(required_population(1, 1, 1, 0.1, 1e-9), Error);
  CHECK_THROWS_AS(required_population(0, 1, 1, 0.1, 0.1), Error);
}

TEST_CASE("group median mitigation") {
  Rng rng = make_rng(76, "kmeans-groups");
  ProtocolConfig cfg;
  cfg.k = 2;
  cfg.epsilon = 0.05;
  cfg.converge_tol = 0.01;
  const std::vector<RVector> init{vec2(0.5, 0.1), vec2(-0.5, -0.1)};

  std::vector<RVector> rows;
  for (int j = 0; j < 3000; ++j) rows.push_back(j % 2 ? vec2(0.7, 0.2) : vec2(-0.6, -0.3));
  const auto same = ingest(rows);
  const auto g0 = group_median_aggregate(same, cfg, init, 3, rng);
  for (const auto& gc : g0.per_group) CHECK(max_abs_diff(g0.centroids, gc) <= 2 * cfg.epsilon);
  CHECK(max_abs_diff(g0.centroids, {vec2(0.7, 0.2), vec2(-0.6, -0.3)}) <= cfg.epsilon);

  CHECK_THROWS_AS(group_median_aggregate(same, cfg, init, 4, rng), Error);
  CHECK_THROWS_AS(group_median_aggregate(same, cfg, init, 1, rng), Error);

  const auto ps = blobs(ring(2, 0.6), 10000, 0.1, rng);
  const auto clean = lloyd(ps, init, cfg.seed);
  const auto g5 = group_median_aggregate(ps, cfg, init, 5, rng, {2});
  CHECK(max_abs_diff(g5.centroids, clean) <= 2 * cfg.epsilon);
  const auto plain = run_protocol(ps, cfg, init, rng, ChannelAttack{true});
  CHECK(max_abs_diff(plain.trajectory.back(), clean) > 10 * cfg.epsilon);

  // Three groups, one corrupted: the median lies between the clean groups
  // and equals one of them whenever the corrupted value is outside their range.
  const auto g3 = group_median_aggregate(ps, cfg, init, 3, rng, {0});
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) {
      const double a = g3.per_group[1][static_cast<size_t>(p)](q), b = g3.per_group[2][static_cast<size_t>(p)](q);
      const double x = g3.per_group[0][static_cast<size_t>(p)](q), m = g3.centroids[static_cast<size_t>(p)](q);
      CHECK(m >= std::min(a, b));
      CHECK(m <= std::max(a, b));
      if (x < std::min(a, b) || x > std::max(a, b)) CHECK((m == a || m == b));
    }
}
