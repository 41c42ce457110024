#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aqml/error.hpp"
#include "aqml/robust.hpp"

using namespace aqml;
using namespace aqml::robust;

namespace {

RawDataset random_dataset(int count, int dim, Rng& rng) {
  RawDataset d;
  for (int j = 0; j < count; ++j) {
    RVector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = normal(rng);
    if (j % 5 == 3) v.setZero();
    d.vectors.push_back(v);
  }
  d.R = d.max_norm() * uniform(rng, 1.0, 2.0);
  return d;
}

// Straight-line transcription of the median-based matrix.
double slow_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

RMatrix slow_robust(const RawDataset& d) {
  const int n = d.dim(), nv = d.count();
  RMatrix m(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      std::vector<double> ck, cl, prod;
      for (int j = 0; j < nv; ++j) {
        ck.push_back(d.vectors[static_cast<size_t>(j)](k));
        cl.push_back(d.vectors[static_cast<size_t>(j)](l));
      }
      const double mk = slow_median(ck), ml = slow_median(cl);
      for (int j = 0; j < nv; ++j) prod.push_back((ck[static_cast<size_t>(j)] - mk) * (cl[static_cast<size_t>(j)] - ml));
      m(k, l) = slow_median(prod);
    }
  return m;
}

}  // namespace

TEST_CASE("embedding examples") {
  RawDataset zero{{RVector::Zero(3), RVector::Zero(3)}, 0.0};
  const auto ez = embed(zero);
  for (const auto& a : ez.daggers)
    for (const auto& b : ez.kets) CHECK(a.dot(b) == 0.0);
  for (const auto& b : ez.kets) CHECK(b.norm() == doctest::Approx(1.0));

  RVector x1(2), x2(2);
  x1 << 3, 4;
  x2 << 5, 0;
  const auto e = embed(RawDataset{{x1, x2}, 5.0});
  CHECK(e.daggers[0].dot(e.kets[1]) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(e.kets[0].size() == 2 * (2 * 2 + 1));

  RVector u1(2), u2(2);
  u1 << 1, 0;
  u2 << std::sqrt(0.5), std::sqrt(0.5);
  const auto eu = embed(RawDataset{{u1, u2}, 1.0});
  CHECK(eu.daggers[0].dot(eu.kets[1]) == doctest::Approx(u1.dot(u2)));
  CHECK(eu.kets[0](1) == 0.0);  // tag |j> weight vanishes
}

TEST_CASE("embedding isometry on random datasets") {
  Rng rng = make_rng(20, "robust-embed");
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_dataset(1 + trial % 9, 1 + trial % 6, rng);
    const auto e = embed(d);
    for (int j = 0; j < d.count(); ++j) {
      CHECK(std::abs(e.kets[static_cast<size_t>(j)].norm() - 1.0) <= 1e-12);
      CHECK(std::abs(e.daggers[static_cast<size_t>(j)].norm() - 1.0) <= 1e-12);
      for (int k = 0; k < d.count(); ++k) {
        const double want = d.vectors[static_cast<size_t>(j)].dot(d.vectors[static_cast<size_t>(k)]) / (d.R * d.R);
        CHECK(std::abs(e.daggers[static_cast<size_t>(j)].dot(e.kets[static_cast<size_t>(k)]) - want) <= 1e-10);
      }
    }
  }
  RVector big(2);
  big << 3, 4;
  CHECK_THROWS_AS(embed(RawDataset{{big}, 4.0}), Error);
}

TEST_CASE("median convention") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({1, 2, 3, 4}) == 2.5);
  CHECK(median({4, 1, 3}) == 3.0);
  CHECK_THROWS_AS(median({}), Error);

  Rng rng = make_rng(21, "robust-median");
  std::vector<double> u(10000);
  for (auto& x : u) x = uniform01(rng);
  CHECK(std::abs(median(u) - 0.5) <= 0.02);

  // Equivariance under a > 0 affine maps.
  std::vector<double> v{0.3, -1.2, 5.5, 2.25, 0.0, 7.0};
  std::vector<double> w;
  for (double x : v) w.push_back(4.0 * x + 1.5);
  CHECK(median(w) == 4.0 * median(v) + 1.5);
}

TEST_CASE("robust and classical PCA matrices") {
  RVector a(3);
  a << 0.2, -0.4, 0.1;
  const auto zero = robust_pca_matrix(RawDataset{{a, a, a}, 1.0});
  CHECK(zero.matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK(classical_pca_matrix(RawDataset{{a}, 1.0}).matrix().cwiseAbs().maxCoeff() == 0.0);

  RVector e1(2), me1(2);
  e1 << 1, 0;
  me1 << -1, 0;
  const RawDataset pm{{e1, me1}, 1.0};
  CHECK(robust_pca_matrix(pm)(0, 0).real() == doctest::Approx(1.0));
  CHECK(classical_pca_matrix(pm)(0, 0).real() == doctest::Approx(1.0));

  Rng rng = make_rng(22, "robust-pca");
  auto d = random_dataset(20, 6, rng);
  const auto m = robust_pca_matrix(d);
  CHECK((m.matrix().real() - slow_robust(d)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((m.matrix() - m.matrix().transpose()).cwiseAbs().maxCoeff() == 0.0);

  // Permutation invariance.
  auto shuffled = d;
  std::shuffle(shuffled.vectors.begin(), shuffled.vectors.end(), rng);
  CHECK((robust_pca_matrix(shuffled).matrix() - m.matrix()).cwiseAbs().maxCoeff() == 0.0);

  // Textbook covariance.
  RMatrix x(d.count(), d.dim());
  for (int j = 0; j < d.count(); ++j) x.row(j) = d.vectors[static_cast<size_t>(j)].transpose();
  const RMatrix centered = x.rowwise() - x.colwise().mean();
  const RMatrix cov = centered.transpose() * centered / d.count();
  CHECK((classical_pca_matrix(d).matrix().real() - cov).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("Hadamard-test inner products reproduce the exact matrix") {
  Rng rng = make_rng(23, "robust-hadamard");
  const auto d = random_dataset(6, 3, rng);
  const RMatrix exact = feature_values(d, InnerProductMode::exact);
  const RMatrix circuit = feature_values(d, InnerProductMode::hadamard_test);
  CHECK((exact - circuit).cwiseAbs().maxCoeff() <= 1e-9 * d.R);
  const auto m1 = robust_pca_matrix(d);
  const auto m2 = robust_pca_matrix(d, InnerProductMode::hadamard_test);
  CHECK((m1.matrix() - m2.matrix()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("poisoning strategies") {
  Rng rng = make_rng(24, "robust-poison");
  auto d = random_dataset(10, 3, rng);
  const RVector adv = RVector::Constant(3, d.R / std::sqrt(3.0));
  ContaminationSpec none{0.0, ContaminationStrategy::replace_prefix, {adv}, 1};
  const auto same = poison(d, none);
  for (int j = 0; j < 10; ++j) CHECK(same.vectors[static_cast<size_t>(j)] == d.vectors[static_cast<size_t>(j)]);

  ContaminationSpec half{0.5, ContaminationStrategy::replace_prefix, {adv}, 1};
  const auto p = poison(d, half);
  for (int j = 0; j < 10; ++j) CHECK((p.vectors[static_cast<size_t>(j)] == adv) == (j < 5));

  ContaminationSpec too_big{0.3, ContaminationStrategy::replace_prefix, {adv * 2.0}, 1};
  CHECK_THROWS_AS(poison(d, too_big), Error);

  ContaminationSpec custom{0.3, ContaminationStrategy::custom, {adv}, 7};
  const auto c = poison(d, custom);
  int replaced = 0;
  for (int j = 0; j < 10; ++j) replaced += c.vectors[static_cast<size_t>(j)] == adv;
  CHECK(replaced == 3);
}

TEST_CASE("spike attack moves the mean but not the median") {
  const auto dist = DistributionSpec::uniform_pm1();
  Rng rng = make_rng(25, "robust-spike");
  RawDataset d = synthetic_dataset(dist, 20000, 2, rng);
  d.R = 50.0;
  const double alpha = 0.1;
  ContaminationSpec spike{alpha, ContaminationStrategy::spike_direction, {}, 0};
  const auto p = poison(d, spike);
  std::vector<double> before, after;
  for (int j = 0; j < d.count(); ++j) {
    before.push_back(d.vectors[static_cast<size_t>(j)](0));
    after.push_back(p.vectors[static_cast<size_t>(j)](0));
  }
  const double mean_shift = mean(after) - mean(before);
  CHECK(mean_shift == doctest::Approx(alpha * d.R).epsilon(0.02));
  CHECK(std::abs(median(after) - median(before)) <= alpha * dist.L + 0.03);
}

TEST_CASE("median stability check") {
  for (const auto& dist : {DistributionSpec::uniform_pm1(), DistributionSpec::sine(), DistributionSpec::cubic()}) {
    dist.validate();
    const auto r0 = median_stability_check(dist, 0.0, 3, 20001, 5);
    CHECK(r0.pass());
    const auto r = median_stability_check(dist, 0.1, 5, 20000, 5);
    CHECK(r.pass());
    const auto rl = median_stability_check(dist, 0.2, 5, 20000, 5, ContaminationSide::lower);
    CHECK(rl.pass());
  }
  // Uniform with one-sided mass placement saturates alpha L.
  const auto sat = median_stability_check(DistributionSpec::uniform_pm1(), 0.1, 5, 100000, 9);
  CHECK(sat.mean_shift == doctest::Approx(0.2).epsilon(0.1));

  DistributionSpec bad{"bad", [](double u) { return 2.0 * u - 1.0; }, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("dataset CSV round trip and rejection") {
  Rng rng = make_rng(26, "robust-csv");
  const auto d = random_dataset(5, 3, rng);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  std::stringstream in(ss.str());
  const auto back = read_dataset_csv(in);
  CHECK(back.R == d.R);
  for (int j = 0; j < 5; ++j) CHECK(back.vectors[static_cast<size_t>(j)] == d.vectors[static_cast<size_t>(j)]);

  std::stringstream nan("dim,2,R,1\n0.1,nan\n");
  CHECK_THROWS_AS(read_dataset_csv(nan), Error);
  std::stringstream ragged("dim,2,R,1\n0.1\n");
  CHECK_THROWS_AS(read_dataset_csv(ragged), Error);
  std::stringstream over("dim,1,R,1\n2.0\n");
  CHECK_THROWS_AS(read_dataset_csv(over), Error);
}
