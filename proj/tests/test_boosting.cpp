#include "doctest.h"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "aqml/boosting.hpp"
#include "aqml/error.hpp"
#include "aqml/statevec.hpp"

using namespace aqml;
using namespace aqml::boosting;
using linalg::Complex;
using linalg::RMatrix;

namespace {

CVector basis(int dim, int k) {
  CVector v = CVector::Zero(dim);
  v(k) = 1.0;
  return v;
}

CVector random_state(int dim, Rng& rng) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

// Independent eigenvalue oracle: Eigen's self-adjoint solver.
Eigen::VectorXd eigen_values(const HermitianOperator& h) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(h.matrix()).eigenvalues();
}

// Mass of the exact QPE outcome distribution on estimated eigenvalues <= 0
// for one eigenvalue E, from the Fejer kernel.
double fejer_nonpositive(double E, int bits) {
  const double phi = std::fmod(-E / (2.0 * M_PI) + 1.0, 1.0);
  const auto f = qsim::fejer_distribution(phi, bits);
  const double m = std::ldexp(1.0, bits);
  double s = 0.0;
  for (size_t y = 0; y < f.size(); ++y) {
    const double e = qsim::eigenvalue_from_phase(static_cast<double>(y) / m);
    if (e < 0.0) s += f[y];
    else if (e == 0.0) s += 0.5 * f[y];
  }
  return s;
}

}  // namespace

TEST_CASE("classifier operators are reflections") {
  RVector w = RVector::Zero(4);
  w(0) = 2.0;
  const auto R = classifier_operator(WeakClassifier::hyperplane(w), 4);
  CHECK(std::abs((R.matrix() * basis(4, 0) - basis(4, 0)).norm()) < 1e-15);
  CHECK(std::abs((R.matrix() * basis(4, 2) + basis(4, 2)).norm()) < 1e-15);

  Rng rng = make_rng(60, "boost-reflect");
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + t % 5;
    RVector v(m);
    for (int i = 0; i < m; ++i) v(i) = normal(rng);
    const auto C = classifier_operator(WeakClassifier::hyperplane(v), m + t % 3);
    const int d = C.dim();
    CHECK((C.matrix() * C.matrix() - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(linalg::is_hermitian(C.matrix(), 0.0));
    // The normal direction is the +1 eigenvector.
    CVector n = CVector::Zero(d);
    for (int i = 0; i < m; ++i) n(i) = v(i) / v.norm();
    CHECK((C.matrix() * n - n).norm() < 1e-12);
  }

  CHECK_THROWS_AS(classifier_operator(WeakClassifier::hyperplane(RVector::Zero(3)), 3), Error);
  CHECK_THROWS_AS(classifier_operator(WeakClassifier::hyperplane(RVector::Ones(5)), 3), Error);
  CMatrix bad = CMatrix::Identity(2, 2);
  bad(0, 0) = 0.5;
  CHECK_THROWS_AS(WeakClassifier::custom(bad), Error);
  CMatrix nonherm = CMatrix::Zero(2, 2);
  nonherm(0, 1) = 1.0;
  nonherm(1, 0) = -1.0;
  CHECK_THROWS_AS(WeakClassifier::custom(nonherm), Error);
  WeakClassifier unknown = WeakClassifier::hyperplane(RVector::Ones(2));
  unknown.tag = "tree";
  CHECK_THROWS_AS(classifier_operator(unknown, 2), Error);
}

TEST_CASE("ensemble operator examples") {
  Rng rng = make_rng(61, "boost-ensemble");
  const CMatrix r1 = random_reflection(4, 2, rng);
  const auto same = EnsembleSpec::uniform({WeakClassifier::custom(r1), WeakClassifier::custom(r1)}, 4);
  CHECK((ensemble_operator(same).matrix() - r1).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(same.distinct_count() == 1);
  CHECK_THROWS_AS(same.validate(true), Error);

  // Z and X anticommute; (Z + X)/2 has eigenvalues +-1/sqrt(2).
  CMatrix Z = CMatrix::Zero(2, 2), X = CMatrix::Zero(2, 2);
  Z(0, 0) = 1.0;
  Z(1, 1) = -1.0;
  X(0, 1) = X(1, 0) = 1.0;
  CHECK((Z * X + X * Z).norm() == 0.0);
  const auto zx = EnsembleSpec::uniform({WeakClassifier::custom(Z), WeakClassifier::custom(X)}, 2);
  const auto ev = eigen_values(ensemble_operator(zx));
  CHECK(std::abs(ev(0) + std::sqrt(0.5)) < 1e-14);
  CHECK(std::abs(ev(1) - std::sqrt(0.5)) < 1e-14);

  // Commuting reflections built in one eigenbasis sharing a +1 vector.
  const CMatrix q = random_reflection(5, 2, rng);  // only used as an orthogonal basis source
  Eigen::SelfAdjointEigenSolver<CMatrix> es(q);
  const CMatrix V = es.eigenvectors();
  std::vector<WeakClassifier> cs;
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd s(5);
    s(0) = 1.0;
    for (int i = 1; i < 5; ++i) s(i) = uniform01(rng) < 0.5 ? 1.0 : -1.0;
    cs.push_back(WeakClassifier::custom(CMatrix(V * s.cast<Complex>().asDiagonal() * V.adjoint())));
  }
  auto spec = EnsembleSpec::uniform(cs, 5);
  spec.weights = {0.5, 0.3, 0.2};
  const auto C = ensemble_operator(spec);
  const CVector phi = V.col(0);
  CHECK((C.matrix() * phi - phi).norm() < 1e-12);

  for (int t = 0; t < 20; ++t) {
    const auto cl = clustered_ensemble(3 + t, 4, 0.8, t % 2 == 0, rng);
    const auto ev2 = eigen_values(ensemble_operator(cl));
    CHECK(ev2.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }

  EnsembleSpec badw = zx;
  badw.weights = {0.7, 0.7};
  CHECK_THROWS_AS(ensemble_operator(badw), Error);
  badw.weights = {1.5, -0.5};
  CHECK_THROWS_AS(ensemble_operator(badw), Error);
}

TEST_CASE("select oracle composition reproduces C") {
  Rng rng = make_rng(62, "boost-select");
  for (int t = 0; t < 10; ++t) {
    const auto spec = clustered_ensemble(2 + t, 3, 0.5, true, rng);
    const CMatrix B = prepare_weights(spec.weights);
    CHECK(linalg::is_unitary(B, 1e-12));
    for (int j = 0; j < spec.size(); ++j)
      CHECK(std::abs(B(j, 0).real() - std::sqrt(spec.weights[static_cast<size_t>(j)])) < 1e-14);
    CHECK(linalg::is_unitary(select_operator(spec), 1e-12));
    CHECK((lcu_block(spec) - ensemble_operator(spec).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("bootstrap training") {
  Rng rng = make_rng(63, "boost-train");
  robust::RawDataset blobs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int y = i % 2 == 0 ? 1 : -1;
    RVector v(3);
    v << 2.0 * y + uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5);
    blobs.vectors.push_back(v);
    labels.push_back(y);
  }
  blobs.R = blobs.max_norm();
  const auto one = train_bootstrap_ensemble(blobs, labels, 1, rng);
  CHECK(one.spec.size() == 1);
  CHECK(one.train_accuracy[0] == 1.0);
  int full = 0;
  for (int i = 0; i < blobs.count(); ++i)
    full += one.spec.classifiers[0].predict(blobs.vectors[static_cast<size_t>(i)]) == labels[static_cast<size_t>(i)];
  CHECK(full == blobs.count());

  // Two distinct rows duplicated: every resample has the same class means.
  robust::RawDataset dup;
  std::vector<int> dl;
  RVector a(2), b(2);
  a << 0.5, 0.1;
  b << -0.2, 0.4;
  for (int i = 0; i < 10; ++i) {
    dup.vectors.push_back(i % 2 ? a : b);
    dl.push_back(i % 2 ? 1 : -1);
  }
  dup.R = 1.0;
  const auto dspec = train_bootstrap_ensemble(dup, dl, 6, rng).spec;
  CHECK(dspec.distinct_count() == 1);
  for (const auto& c : dspec.classifiers) CHECK((c.w - (a - b)).norm() < 1e-15);

  // Excluded fraction against (1 - 1/n)^n.
  const auto many = train_bootstrap_ensemble(blobs, labels, 25, rng);
  double mean_excl = 0.0;
  for (double e : many.excluded_fraction) mean_excl += e / 25.0;
  const double expect = std::pow(1.0 - 1.0 / blobs.count(), blobs.count());
  CHECK(std::abs(mean_excl - expect) <= 0.05);
  CHECK(std::abs(expect - std::exp(-1.0)) < 0.01);

  std::vector<int> mono(static_cast<size_t>(blobs.count()), 1);
  CHECK_THROWS_AS(train_bootstrap_ensemble(blobs, mono, 3, rng), Error);
  labels[0] = 0;
  CHECK_THROWS_AS(train_bootstrap_ensemble(blobs, labels, 3, rng), Error);
}

TEST_CASE("eigenspace classification") {
  Rng rng = make_rng(64, "boost-classify");
  ClassifyOptions exact;
  exact.shots = 0;

  // Simultaneous +1 eigenvector: exact projector mass 1; the QPE mass misses
  // only the Fejer tail of the single eigenvalue 1.
  CMatrix D1 = CMatrix::Identity(3, 3), D2 = CMatrix::Identity(3, 3);
  D1(1, 1) = -1.0;
  D2(2, 2) = -1.0;
  const auto diag = EnsembleSpec::uniform({WeakClassifier::custom(D1), WeakClassifier::custom(D2)}, 3);
  const auto c0 = classify_by_eigenspace(basis(3, 0), diag, exact, rng);
  CHECK(c0.cls == 1);
  CHECK(c0.exact_mass_plus == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(c0.mass_plus - (1.0 - fejer_nonpositive(1.0, exact.bits))) < 1e-9);
  CHECK(c0.mass_plus > 0.998);

  // Overlaps 0.7 / 0.3 on the two bands.
  Rng irng = make_rng(64, "boost-classify-instance");
  const auto spec = clustered_ensemble(5, 4, 0.3, false, irng);
  const auto C = ensemble_operator(spec);
  const auto eig = linalg::eig_hermitian(C);
  CVector plus = CVector::Zero(4), minus = CVector::Zero(4);
  for (int n = 0; n < 4; ++n) {
    if (eig.values[static_cast<size_t>(n)] > 0.0 && plus.norm() == 0.0) plus = eig.vectors.col(n);
    if (eig.values[static_cast<size_t>(n)] < 0.0 && minus.norm() == 0.0) minus = eig.vectors.col(n);
  }
  REQUIRE(plus.norm() > 0.0);
  REQUIRE(minus.norm() > 0.0);
  const CVector psi = std::sqrt(0.7) * plus + std::sqrt(0.3) * minus;
  ClassifyOptions sampled;
  sampled.shots = 4000;
  const auto c1 = classify_by_eigenspace(psi, spec, sampled, rng);
  CHECK(c1.exact_mass_plus == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(c1.cls == 1);
  const double sigma = std::sqrt(0.21 / sampled.shots);
  CHECK(std::abs(c1.mass_plus - 0.7) <= 3.0 * sigma + 0.005);

  // lcu-taylor mode matches exact evolution; one application costs r K select
  // and 2 r prepare queries.
  ClassifyOptions lcu = exact;
  lcu.sim = SimMode::lcu_taylor;
  const auto c2 = classify_by_eigenspace(psi, spec, lcu, rng);
  const auto c3 = classify_by_eigenspace(psi, spec, exact, rng);
  CHECK(c2.evolution_error < 1e-9);
  CHECK(std::abs(c2.mass_plus - c3.mass_plus) < 1e-8);
  const std::uint64_t apps = (std::uint64_t{1} << lcu.bits) - 1;
  CHECK(c2.prepare_queries == apps * 4);
  CHECK(c2.select_queries % (apps * 2) == 0);
  CHECK(c2.select_queries / (apps * 2) >= 5);

  // Eigenvalue 0 on the support: unresolved, exact tie.
  CMatrix P = CMatrix::Identity(2, 2);
  P(1, 1) = -1.0;
  CMatrix N = -CMatrix::Identity(2, 2);
  auto zero = EnsembleSpec::uniform({WeakClassifier::custom(P), WeakClassifier::custom(N)}, 2);
  const auto c4 = classify_by_eigenspace(basis(2, 0), zero, exact, rng);
  CHECK(c4.unresolved);
  CHECK(c4.tie);
  CHECK(c4.cls == 1);
  ClassifyOptions neg = exact;
  neg.tie_positive = false;
  CHECK(classify_by_eigenspace(basis(2, 0), zero, neg, rng).cls == -1);
  CHECK_FALSE(classify_by_eigenspace(basis(2, 1), zero, exact, rng).unresolved);

  CHECK_THROWS_AS(classify_by_eigenspace(basis(3, 0), zero, exact, rng), Error);
  CHECK_THROWS_AS(classify_by_eigenspace(2.0 * basis(2, 0), zero, exact, rng), Error);
}

TEST_CASE("adversary bound") {
  Rng rng = make_rng(65, "boost-attack");
  const auto spec = clustered_ensemble(3, 4, 0.5, false, rng);
  AttackSpec none;
  none.alpha = 0.0;
  const auto r0 = attack_ensemble(spec, none);
  CHECK(r0.replaced.empty());
  CHECK(r0.norm_shift == 0.0);

  AttackSpec flip;
  flip.alpha = 1.0 / 3.0;
  flip.indices = {0};
  const auto r1 = attack_ensemble(spec, flip);
  CHECK(r1.norm_shift == doctest::Approx(2.0 / 3.0).epsilon(1e-13));

  AttackSpec greedy;
  greedy.alpha = 0.5;
  auto weighted = spec;
  weighted.weights = {0.2, 0.5, 0.3};
  const auto r2 = attack_ensemble(weighted, greedy);
  CHECK(r2.replaced == std::vector<int>{1});

  AttackSpec over;
  over.alpha = 0.2;
  over.indices = {1};
  CHECK_THROWS_AS(attack_ensemble(weighted, over), Error);
  AttackSpec bad;
  bad.alpha = 0.5;
  bad.strategy = AttackStrategy::custom;
  bad.replacements = {CMatrix::Identity(4, 4) * 0.5};
  CHECK_THROWS_AS(attack_ensemble(spec, bad), Error);

  // 200 random attacks; Weyl shift recomputed with an independent solver.
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 10;
    const auto s = clustered_ensemble(n, 2 + t % 5, uniform(rng, 0.0, 1.5), t % 2 == 0, rng);
    AttackSpec a;
    a.alpha = uniform(rng, 0.0, 0.6);
    const int mode = t % 3;
    a.strategy = mode == 0 ? AttackStrategy::flip_worst
                           : mode == 1 ? AttackStrategy::replace_target : AttackStrategy::custom;
    a.target = random_state(s.ambient_dim, rng);
    a.target_class = t % 4 < 2 ? -1 : 1;
    for (int k = 0; k < 3; ++k) {
      const int d = s.ambient_dim;
      a.replacements.push_back(random_reflection(d, std::uniform_int_distribution<int>(0, d)(rng), rng));
    }
    const auto r = attack_ensemble(s, a);
    CHECK(r.replaced_mass <= a.alpha + 1e-12);
    const auto e = eigen_values(ensemble_operator(s)), ep = eigen_values(ensemble_operator(r.attacked));
    CHECK((e - ep).cwiseAbs().maxCoeff() <= 2.0 * a.alpha + 1e-12);
    CHECK(std::abs((e - ep).cwiseAbs().maxCoeff() - r.eig_shift_max) < 1e-12);
  }
}

TEST_CASE("class stability below gamma/4") {
  Rng rng = make_rng(66, "boost-stability");
  CHECK(stability_margin(0.0, 1.0) == 0.0);
  CHECK(stability_margin(0.3, 1.0) == 1.0);
  CHECK(stability_margin(0.1, 1.0) == doctest::Approx(std::sin(std::asin(0.4) / 2.0)));

  auto check_instance = [&](const EnsembleSpec& s, const std::vector<int>& subset, AttackStrategy how,
                            const std::vector<CVector>& probes, int& qualifying, int& probes_checked) {
    double mass = 0.0;
    for (int j : subset) mass += s.weights[static_cast<size_t>(j)];
    const auto C = ensemble_operator(s);
    const double gamma = measured_gamma(C);
    if (!(mass < gamma / 4.0)) return;
    ++qualifying;
    AttackSpec a;
    a.alpha = mass;
    a.indices = subset;
    a.strategy = how;
    a.target = probes.front();
    a.target_class = -1;
    a.replacements = {random_reflection(s.ambient_dim, 1, rng), random_reflection(s.ambient_dim, 0, rng)};
    const auto r = attack_ensemble(s, a);
    const auto Cp = ensemble_operator(r.attacked);
    CHECK(spectral_signs_preserved(C, Cp));
    const double margin = stability_margin(mass, gamma);
    for (const auto& psi : probes) {
      const double m0 = exact_positive_mass(C, psi), m1 = exact_positive_mass(Cp, psi);
      CHECK(std::abs(m1 - m0) <= margin + 1e-12);
      if (std::abs(m0 - 0.5) > margin) {
        ++probes_checked;
        CHECK((m0 > 0.5) == (m1 > 0.5));
      }
    }
  };

  // Exhaustive: three classifiers, every subset, every strategy.
  int qualifying = 0, checked = 0;
  for (int t = 0; t < 40; ++t) {
    const auto s = clustered_ensemble(3, 3 + t % 3, 0.25, true, rng);
    std::vector<CVector> probes;
    for (int p = 0; p < 20; ++p) probes.push_back(random_state(s.ambient_dim, rng));
    for (int mask = 1; mask < 8; ++mask) {
      std::vector<int> subset;
      for (int j = 0; j < 3; ++j)
        if (mask >> j & 1) subset.push_back(j);
      for (auto how : {AttackStrategy::flip_worst, AttackStrategy::replace_target, AttackStrategy::custom})
        check_instance(s, subset, how, probes, qualifying, checked);
    }
  }
  CHECK(qualifying > 50);
  CHECK(checked > 500);

  // Randomized: 10-25 classifiers, random subsets.
  qualifying = checked = 0;
  for (int t = 0; t < 60; ++t) {
    const int n = 10 + t % 16;
    const auto s = clustered_ensemble(n, 4, 0.3, t % 2 == 0, rng);
    std::vector<CVector> probes;
    for (int p = 0; p < 10; ++p) probes.push_back(random_state(4, rng));
    std::vector<int> subset;
    const double frac = uniform(rng, 0.05, 0.5);
    for (int j = 0; j < n; ++j)
      if (uniform01(rng) < frac) subset.push_back(j);
    if (subset.empty()) subset.push_back(0);
    const auto how = static_cast<AttackStrategy>(t % 3);
    check_instance(s, subset, how, probes, qualifying, checked);
  }
  CHECK(qualifying > 20);
  CHECK(checked > 100);
}

TEST_CASE("single-classifier attack on the mean classifier") {
  Rng rng = make_rng(67, "boost-mean");
  for (int N = 2; N <= 25; ++N) {
    for (int rep = 0; rep < 4; ++rep) {
      const auto inst = mean_attack_instance(N, 3 + rep, rng);
      inst.spec.validate(true);
      // Every classifier is nearly neutral on psi.
      for (const auto& c : inst.spec.classifiers) {
        const double e = inst.psi.dot(classifier_operator(c, inst.spec.ambient_dim).matrix() * inst.psi).real();
        CHECK(std::abs(e) <= 1.0 / (2.0 * N) + 1e-12);
      }
      const auto before = classify_by_mean(inst.psi, inst.spec);
      CHECK(before.cls == 1);
      const auto r = attack_ensemble(inst.spec, inst.attack);
      const auto after = classify_by_mean(inst.psi, r.attacked);
      CHECK(after.cls == -1);
      const double e1 =
          inst.psi.dot(classifier_operator(r.attacked.classifiers[0], inst.spec.ambient_dim).matrix() * inst.psi).real();
      CHECK(e1 == doctest::Approx(-1.0).epsilon(1e-12));

      // Eigenspace method. Below gamma/4 the spectral signs survive and the
      // positive-band mass moves by at most the Davis-Kahan margin; at
      // N >= 10 (alpha <= 1/10 <= gamma/4) the class itself is unchanged.
      const auto C = ensemble_operator(inst.spec), Cp = ensemble_operator(r.attacked);
      const double gamma = measured_gamma(C);
      const double m0 = exact_positive_mass(C, inst.psi), m1 = exact_positive_mass(Cp, inst.psi);
      CHECK(gamma >= 0.4);
      CHECK(m0 > 0.5);
      if (1.0 / N < gamma / 4.0) {
        CHECK(spectral_signs_preserved(C, Cp));
        CHECK(std::abs(m1 - m0) <= stability_margin(1.0 / N, gamma) + 1e-12);
      }
      if (N >= 10) CHECK(m1 > 0.5);
    }
  }

  // The N = 10 case through sampled phase estimation.
  const auto inst = mean_attack_instance(10, 4, rng);
  const auto r = attack_ensemble(inst.spec, inst.attack);
  ClassifyOptions opts;
  opts.shots = 2000;
  CHECK(classify_by_eigenspace(inst.psi, inst.spec, opts, rng).cls == 1);
  CHECK(classify_by_eigenspace(inst.psi, r.attacked, opts, rng).cls == 1);
  CHECK(classify_by_mean(inst.psi, r.attacked).cls == -1);

  // All classifiers agreeing on psi: both methods give the same class.
  const auto agree = clustered_ensemble(4, 3, 0.05, false, rng);
  const auto eig = linalg::eig_hermitian(ensemble_operator(agree));
  const CVector top = eig.vectors.col(2);
  ClassifyOptions ex;
  ex.shots = 0;
  CHECK(classify_by_mean(top, agree).cls == classify_by_eigenspace(top, agree, ex, rng).cls);
}
