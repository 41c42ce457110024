#include "aqml/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "aqml/error.hpp"
#include "aqml/lcu.hpp"
#include "aqml/statevec.hpp"

namespace aqml::boosting {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("boosting", msg); }

constexpr double kTwoPi = 6.283185307179586477;
constexpr double kLn2 = 0.693147180559945309;
constexpr double kReflectionTol = 1e-10;
constexpr double kZeroTol = 1e-12;

void check_reflection(const CMatrix& op, const std::string& what) {
  if (op.rows() != op.cols() || op.rows() == 0) fail(what + " must be a non-empty square matrix");
  if (!linalg::is_hermitian(op, kReflectionTol)) fail(what + " is not Hermitian");
  const CMatrix sq = op * op - CMatrix::Identity(op.rows(), op.cols());
  if (sq.cwiseAbs().maxCoeff() > kReflectionTol) fail(what + " is not unitary (C^2 != I)");
}

std::vector<double> sorted_eigenvalues(const HermitianOperator& h) { return linalg::eig_hermitian(h).values; }

}  // namespace

int WeakClassifier::predict(const RVector& x) const {
  if (tag != kHyperplaneTag) fail("predict needs a hyperplane classifier");
  if (x.size() != w.size()) fail("feature dimension mismatch");
  return w.dot(x) - offset >= 0.0 ? 1 : -1;
}

WeakClassifier WeakClassifier::hyperplane(RVector w, double offset) {
  WeakClassifier c;
  c.tag = kHyperplaneTag;
  c.w = std::move(w);
  c.offset = offset;
  return c;
}

WeakClassifier WeakClassifier::custom(const CMatrix& op) {
  check_reflection(op, "custom classifier");
  WeakClassifier c;
  c.tag = kCustomTag;
  c.op = op;
  return c;
}

HermitianOperator classifier_operator(const WeakClassifier& c, int ambient_dim) {
  if (ambient_dim < 1) fail("ambient dimension must be >= 1");
  if (c.tag == kCustomTag) {
    if (c.op.rows() != ambient_dim) fail("custom operator does not match the ambient dimension");
    check_reflection(c.op, "custom classifier");
    return HermitianOperator::symmetrized(c.op);
  }
  if (c.tag != kHyperplaneTag) fail("unknown classifier tag '" + c.tag + "'");
  if (c.w.size() > ambient_dim) fail("weight vector does not embed in the ambient dimension");
  const double len = c.w.norm();
  if (!(len > 0.0) || !std::isfinite(len)) fail("zero normal vector");
  CVector n = CVector::Zero(ambient_dim);
  for (int i = 0; i < c.w.size(); ++i) n(i) = c.w(i) / len;
  const CMatrix r = 2.0 * n * n.adjoint() - CMatrix::Identity(ambient_dim, ambient_dim);
  return HermitianOperator::symmetrized(r);
}

int EnsembleSpec::distinct_count() const {
  std::vector<CMatrix> seen;
  for (int j = 0; j < size(); ++j) {
    if (!(weights[static_cast<size_t>(j)] > 0.0)) continue;
    const CMatrix op = classifier_operator(classifiers[static_cast<size_t>(j)], ambient_dim).matrix();
    bool fresh = true;
    for (const auto& s : seen)
      if ((s - op).cwiseAbs().maxCoeff() <= kReflectionTol) fresh = false;
    if (fresh) seen.push_back(op);
  }
  return static_cast<int>(seen.size());
}

void EnsembleSpec::validate(bool strict) const {
  if (classifiers.empty()) fail("ensemble has no classifiers");
  if (weights.size() != classifiers.size()) fail("one weight per classifier required");
  double sum = 0.0;
  for (double b : weights) {
    if (!(b >= 0.0) || !std::isfinite(b)) fail("weights must be non-negative");
    sum += b;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail("weights must sum to 1");
  if (!(gap_gamma >= 0.0)) fail("gap_gamma must be >= 0");
  for (const auto& c : classifiers) (void)classifier_operator(c, ambient_dim);
  if (strict && distinct_count() < 2) fail("need at least two distinct classifiers with positive weight");
}

EnsembleSpec EnsembleSpec::uniform(std::vector<WeakClassifier> cs, int ambient_dim) {
  EnsembleSpec s;
  const size_t n = cs.size();
  s.classifiers = std::move(cs);
  s.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  s.ambient_dim = ambient_dim;
  return s;
}

HermitianOperator ensemble_operator(const EnsembleSpec& spec) {
  spec.validate(false);
  const int d = spec.ambient_dim;
  CMatrix c = CMatrix::Zero(d, d);
  for (int j = 0; j < spec.size(); ++j)
    c += spec.weights[static_cast<size_t>(j)] *
         classifier_operator(spec.classifiers[static_cast<size_t>(j)], d).matrix();
  return HermitianOperator::symmetrized(c);
}

double measured_gamma(const HermitianOperator& C) {
  double m = std::numeric_limits<double>::infinity();
  for (double e : sorted_eigenvalues(C)) m = std::min(m, std::abs(e));
  return 2.0 * m;
}

double support_gamma(const HermitianOperator& C, const CVector& psi, double tol) {
  const auto eig = linalg::eig_hermitian(C);
  double m = std::numeric_limits<double>::infinity();
  for (int n = 0; n < eig.dim(); ++n)
    if (std::norm(eig.vectors.col(n).dot(psi)) > tol) m = std::min(m, std::abs(eig.values[static_cast<size_t>(n)]));
  return 2.0 * m;
}

TrainedEnsemble train_bootstrap_ensemble(const robust::RawDataset& data, const std::vector<int>& labels, int count,
                                         Rng& rng) {
  const int n = data.count();
  if (n < 2) fail("need at least two labeled rows");
  if (static_cast<int>(labels.size()) != n) fail("one label per row required");
  for (int y : labels)
    if (y != 1 && y != -1) fail("labels must be +1 or -1");
  if (count < 1) fail("count must be >= 1");
  const int dim = data.dim();

  TrainedEnsemble out;
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int b = 0; b < count; ++b) {
    std::vector<int> idx;
    int redraws = 0;
    for (;;) {
      idx.clear();
      int pos = 0;
      for (int i = 0; i < n; ++i) {
        idx.push_back(pick(rng));
        pos += labels[static_cast<size_t>(idx.back())] == 1;
      }
      if (pos > 0 && pos < n) break;
      if (++redraws >= 10) fail("bootstrap resample held a single class 10 times");
    }
    RVector mu_p = RVector::Zero(dim), mu_m = RVector::Zero(dim);
    int np = 0, nm = 0;
    for (int i : idx) {
      if (labels[static_cast<size_t>(i)] == 1) {
        mu_p += data.vectors[static_cast<size_t>(i)];
        ++np;
      } else {
        mu_m += data.vectors[static_cast<size_t>(i)];
        ++nm;
      }
    }
    mu_p /= np;
    mu_m /= nm;
    const RVector w = mu_p - mu_m;
    if (!(w.norm() > 0.0)) fail("class means coincide: zero normal vector");
    auto c = WeakClassifier::hyperplane(w, w.dot(mu_p + mu_m) / 2.0);

    int correct = 0;
    for (int i : idx) correct += c.predict(data.vectors[static_cast<size_t>(i)]) == labels[static_cast<size_t>(i)];
    const std::set<int> distinct(idx.begin(), idx.end());
    out.excluded_fraction.push_back(1.0 - static_cast<double>(distinct.size()) / n);
    out.train_accuracy.push_back(static_cast<double>(correct) / n);
    out.redraws.push_back(redraws);
    out.spec.classifiers.push_back(std::move(c));
  }
  out.spec.weights.assign(static_cast<size_t>(count), 1.0 / count);
  out.spec.ambient_dim = dim;
  return out;
}

CMatrix prepare_weights(const std::vector<double>& b) {
  const int n = static_cast<int>(b.size());
  if (n < 1) fail("no weights");
  linalg::RVector target(n);
  for (int j = 0; j < n; ++j) {
    if (!(b[static_cast<size_t>(j)] >= 0.0)) fail("weights must be non-negative");
    target(j) = std::sqrt(b[static_cast<size_t>(j)]);
  }
  if (std::abs(target.squaredNorm() - 1.0) > 1e-12) fail("weights must sum to 1");
  // Householder reflection taking e_0 to target.
  linalg::RVector v = -target;
  v(0) += 1.0;
  linalg::RMatrix h = linalg::RMatrix::Identity(n, n);
  const double vv = v.squaredNorm();
  if (vv > 1e-30) h -= 2.0 * v * v.transpose() / vv;
  return h.cast<linalg::Complex>();
}

CMatrix select_operator(const EnsembleSpec& spec) {
  spec.validate(false);
  const int d = spec.ambient_dim, n = spec.size();
  CMatrix s = CMatrix::Zero(n * d, n * d);
  for (int j = 0; j < n; ++j)
    s.block(j * d, j * d, d, d) = classifier_operator(spec.classifiers[static_cast<size_t>(j)], d).matrix();
  return s;
}

CMatrix lcu_block(const EnsembleSpec& spec) {
  const int d = spec.ambient_dim;
  const CMatrix B = linalg::kron(prepare_weights(spec.weights), CMatrix::Identity(d, d));
  const CMatrix full = B.adjoint() * select_operator(spec) * B;
  return full.topLeftCorner(d, d);
}

double exact_positive_mass(const HermitianOperator& C, const CVector& psi) {
  const auto eig = linalg::eig_hermitian(C);
  double m = 0.0;
  for (int n = 0; n < eig.dim(); ++n) {
    const double e = eig.values[static_cast<size_t>(n)];
    const double w = std::norm(eig.vectors.col(n).dot(psi));
    if (e > kZeroTol) m += w;
    else if (e >= -kZeroTol) m += 0.5 * w;
  }
  return m;
}

Classification classify_by_eigenspace(const CVector& psi, const EnsembleSpec& spec, const ClassifyOptions& opts,
                                      Rng& rng) {
  spec.validate(true);
  if (psi.size() != spec.ambient_dim) fail("state dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > 1e-10) fail("state must be unit norm");
  if (opts.bits < 1 || opts.bits > 16) fail("bits must lie in [1, 16]");
  if (opts.shots < 0) fail("shots must be >= 0");

  Classification r;
  const HermitianOperator C = ensemble_operator(spec);
  r.exact_mass_plus = exact_positive_mass(C, psi);
  const double res = kTwoPi * std::ldexp(1.0, -opts.bits);
  const auto eig = linalg::eig_hermitian(C);
  double near_zero = 0.0;
  for (int n = 0; n < eig.dim(); ++n)
    if (std::abs(eig.values[static_cast<size_t>(n)]) <= res) near_zero += std::norm(eig.vectors.col(n).dot(psi));
  r.unresolved = near_zero > 1e-9;

  const std::uint64_t apps = (std::uint64_t{1} << opts.bits) - 1;
  CMatrix U;
  if (opts.sim == SimMode::exact_exp) {
    U = linalg::operator_exp(C, 1.0);
  } else {
    // Sum of b_j is 1, so t = 1 splits into r = ceil(1 / ln 2) segments.
    const int segs = static_cast<int>(std::ceil(1.0 / kLn2));
    const double seg_t = 1.0 / segs;
    int K = 1;
    while (std::expm1(segs * std::log1p(lcu::truncation_bound(seg_t, K))) > opts.target_error && K < 60) ++K;
    const auto block = HermitianOperator::symmetrized(lcu_block(spec));
    const auto seg = lcu::taylor_segment(block, seg_t, K);
    U = CMatrix::Identity(spec.ambient_dim, spec.ambient_dim);
    for (int i = 0; i < segs; ++i) U = seg.op * U;
    r.evolution_error = linalg::norm(CMatrix(U - linalg::operator_exp(C, 1.0)), linalg::NormKind::spectral);
    r.select_queries = apps * static_cast<std::uint64_t>(segs * K);
    r.prepare_queries = apps * static_cast<std::uint64_t>(2 * segs);
  }

  const auto dist = qsim::phase_distribution(U, psi, opts.bits);
  const double m = std::ldexp(1.0, opts.bits);
  std::vector<double> weight(dist.size());
  if (opts.shots == 0) {
    weight = dist;
  } else {
    const auto counts = qsim::sample_counts(dist, opts.shots, rng);
    for (size_t y = 0; y < dist.size(); ++y) weight[y] = static_cast<double>(counts[y]) / opts.shots;
  }
  for (size_t y = 0; y < dist.size(); ++y) {
    const double e = qsim::eigenvalue_from_phase(static_cast<double>(y) / m);
    if (e > 0.0) r.mass_plus += weight[y];
    else if (e == 0.0) r.mass_plus += 0.5 * weight[y];
  }
  r.confidence = std::abs(r.mass_plus - 0.5);
  if (r.mass_plus > 0.5) r.cls = 1;
  else if (r.mass_plus < 0.5) r.cls = -1;
  else {
    r.tie = true;
    r.cls = opts.tie_positive ? 1 : -1;
  }
  return r;
}

MeanClassification classify_by_mean(const CVector& psi, const EnsembleSpec& spec) {
  spec.validate(false);
  if (psi.size() != spec.ambient_dim) fail("state dimension mismatch");
  MeanClassification r;
  const HermitianOperator C = ensemble_operator(spec);
  r.expectation = psi.dot(C.matrix() * psi).real();
  if (std::abs(r.expectation) <= 1e-14) {
    r.tie = true;
    r.cls = 1;
  } else {
    r.cls = r.expectation > 0.0 ? 1 : -1;
  }
  return r;
}

AttackReport attack_ensemble(const EnsembleSpec& spec, const AttackSpec& attack) {
  spec.validate(false);
  if (!(attack.alpha >= 0.0 && attack.alpha < 1.0)) fail("alpha must lie in [0, 1)");
  const int n = spec.size(), d = spec.ambient_dim;

  AttackReport r;
  r.bound = 2.0 * attack.alpha;
  if (attack.indices.empty()) {
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return spec.weights[static_cast<size_t>(a)] > spec.weights[static_cast<size_t>(b)];
    });
    for (int j : order) {
      const double b = spec.weights[static_cast<size_t>(j)];
      if (r.replaced_mass + b > attack.alpha + 1e-12) continue;
      r.replaced.push_back(j);
      r.replaced_mass += b;
    }
  } else {
    std::set<int> uniq;
    for (int j : attack.indices) {
      if (j < 0 || j >= n) fail("attack index out of range");
      if (!uniq.insert(j).second) fail("duplicate attack index");
      r.replaced.push_back(j);
      r.replaced_mass += spec.weights[static_cast<size_t>(j)];
    }
    if (r.replaced_mass > attack.alpha + 1e-12) fail("replaced weight mass exceeds alpha");
  }

  r.attacked = spec;
  CMatrix target_op;
  if (attack.strategy == AttackStrategy::replace_target) {
    if (attack.target.size() != d) fail("attack target dimension mismatch");
    if (std::abs(attack.target.norm() - 1.0) > 1e-10) fail("attack target must be unit norm");
    if (attack.target_class != 1 && attack.target_class != -1) fail("target_class must be +1 or -1");
    const CMatrix refl = CMatrix::Identity(d, d) - 2.0 * attack.target * attack.target.adjoint();
    target_op = attack.target_class == -1 ? refl : CMatrix(-refl);
  }
  if (attack.strategy == AttackStrategy::custom && attack.replacements.empty())
    fail("custom attack needs replacement operators");
  for (size_t k = 0; k < r.replaced.size(); ++k) {
    const auto j = static_cast<size_t>(r.replaced[k]);
    CMatrix op;
    switch (attack.strategy) {
      case AttackStrategy::flip_worst:
        op = -classifier_operator(spec.classifiers[j], d).matrix();
        break;
      case AttackStrategy::replace_target:
        op = target_op;
        break;
      case AttackStrategy::custom:
        op = attack.replacements[k % attack.replacements.size()];
        if (op.rows() != d) fail("replacement operator does not match the ambient dimension");
        break;
    }
    r.attacked.classifiers[j] = WeakClassifier::custom(op);
  }

  const HermitianOperator C = ensemble_operator(spec);
  const HermitianOperator Cp = ensemble_operator(r.attacked);
  r.norm_shift = linalg::norm(Cp - C, linalg::NormKind::spectral);
  const auto e = sorted_eigenvalues(C), ep = sorted_eigenvalues(Cp);
  for (size_t i = 0; i < e.size(); ++i) r.eig_shift_max = std::max(r.eig_shift_max, std::abs(e[i] - ep[i]));
  if (!r.within()) {
    std::ostringstream os;
    os << "adversary bound violated: ||C' - C|| = " << r.norm_shift << ", max eigenvalue shift = " << r.eig_shift_max
       << ", 2 alpha = " << r.bound;
    fail(os.str());
  }
  return r;
}

bool spectral_signs_preserved(const HermitianOperator& C, const HermitianOperator& Cp) {
  const auto e = sorted_eigenvalues(C), ep = sorted_eigenvalues(Cp);
  if (e.size() != ep.size()) fail("dimension mismatch");
  for (size_t i = 0; i < e.size(); ++i)
    if ((e[i] > 0.0) != (ep[i] > 0.0) || (e[i] < 0.0) != (ep[i] < 0.0)) return false;
  return true;
}

double stability_margin(double alpha, double gamma) {
  if (!(alpha >= 0.0) || !(gamma > 0.0)) fail("need alpha >= 0 and gamma > 0");
  const double x = 4.0 * alpha / gamma;
  if (x >= 1.0) return 1.0;
  return std::sin(0.5 * std::asin(x));
}

CMatrix random_reflection(int dim, int positives, Rng& rng) {
  if (dim < 1 || positives < 0 || positives > dim) fail("bad reflection signature");
  linalg::RMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
  const linalg::RMatrix q = Eigen::HouseholderQR<linalg::RMatrix>(g).householderQ();
  linalg::RVector s = -linalg::RVector::Ones(dim);
  s.head(positives).setOnes();
  const linalg::RMatrix r = q * s.asDiagonal() * q.transpose();
  return ((r + r.transpose()) / 2.0).cast<linalg::Complex>();
}

EnsembleSpec clustered_ensemble(int N, int dim, double spread, bool random_weights, Rng& rng) {
  if (N < 1 || dim < 2) fail("clustered ensemble needs N >= 1 and dim >= 2");
  if (!(spread >= 0.0)) fail("spread must be >= 0");
  const int positives = std::uniform_int_distribution<int>(1, dim - 1)(rng);
  const CMatrix r0 = random_reflection(dim, positives, rng);
  std::vector<WeakClassifier> cs;
  for (int j = 0; j < N; ++j) {
    linalg::RMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < dim; ++k) a(i, k) = normal(rng);
    a = (a - a.transpose()).eval() / 2.0;
    // exp(spread A) = exp(-i H t) with H = i A, t = spread.
    const auto h = HermitianOperator::symmetrized(linalg::Complex(0.0, 1.0) * a.cast<linalg::Complex>());
    const CMatrix q = linalg::operator_exp(h, spread);
    cs.push_back(WeakClassifier::custom(CMatrix(q * r0 * q.adjoint())));
  }
  auto spec = EnsembleSpec::uniform(std::move(cs), dim);
  if (random_weights) {
    std::exponential_distribution<double> ex(1.0);
    double sum = 0.0;
    for (auto& b : spec.weights) sum += (b = ex(rng));
    for (auto& b : spec.weights) b /= sum;
  }
  return spec;
}

MeanAttackInstance mean_attack_instance(int N, int dim, Rng& rng) {
  if (N < 2) fail("mean attack needs N >= 2");
  if (dim < 3) fail("mean attack needs dim >= 3");
  linalg::RMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = normal(rng);
  const linalg::RMatrix q = Eigen::HouseholderQR<linalg::RMatrix>(g).householderQ();
  const linalg::RVector n1 = q.col(0), n2 = q.col(1), n3 = q.col(2);

  const double m = uniform(rng, 0.7, 0.8);
  const double s = 0.4 / N;
  const double c = (1.0 - m + s) / m;
  const double sn = std::sqrt(1.0 - c * c);

  MeanAttackInstance out;
  std::vector<WeakClassifier> cs;
  for (int j = 0; j < N; ++j) {
    const double sigma = j % 2 == 0 ? 1.0 : -1.0;
    linalg::RMatrix op = -linalg::RMatrix::Identity(dim, dim);
    op += (1.0 + c) * n1 * n1.transpose() + (1.0 - c) * n3 * n3.transpose();
    op += sigma * sn * (n1 * n3.transpose() + n3 * n1.transpose());
    cs.push_back(WeakClassifier::custom(op.cast<linalg::Complex>()));
  }
  out.spec = EnsembleSpec::uniform(std::move(cs), dim);
  out.psi = (std::sqrt(m) * n1 + std::sqrt(1.0 - m) * n2).cast<linalg::Complex>();
  out.spec.gap_gamma = measured_gamma(ensemble_operator(out.spec));
  out.attack.alpha = 1.0 / N;
  out.attack.strategy = AttackStrategy::replace_target;
  out.attack.indices = {0};
  out.attack.target = out.psi;
  out.attack.target_class = -1;
  return out;
}

}  // namespace aqml::boosting
