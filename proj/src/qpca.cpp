#include "aqml/qpca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "aqml/error.hpp"
#include "aqml/statevec.hpp"

namespace aqml::qpca {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("qpca-pipeline", msg); }

constexpr double kTwoPi = 6.283185307179586477;

size_t nearest(const std::vector<double>& sorted, double v) {
  size_t best = 0;
  for (size_t i = 1; i < sorted.size(); ++i)
    if (std::abs(sorted[i] - v) < std::abs(sorted[best] - v)) best = i;
  return best;
}

}  // namespace

BuiltMatrix build_matrix(const robust::RawDataset& data, const BuildOptions& opts, Rng& rng) {
  data.validate();
  BuiltMatrix out;
  if (opts.mode == MatrixMode::exact_median) {
    out.M = robust::robust_pca_matrix(data);
    return out;
  }
  if (!(opts.gamma > 0.0 && opts.gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(opts.delta > 0.0 && opts.delta < 1.0)) fail("delta must lie in (0, 1)");
  const RMatrix f = robust::feature_values(data, robust::InnerProductMode::hadamard_test);
  const int n = data.dim();
  RMatrix m(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      median::MatrixElementOracle o(f, data.R, k, l, opts.gamma, opts.delta, opts.failure_mode);
      const auto d = o.draw(rng);
      m(k, l) = d.value;
      out.charges += d.charges;
      out.failed_entries += !d.success_branch;
    }
  const RMatrix sym = (m + m.transpose()) / 2.0;
  out.M = HermitianOperator::from_real(sym, 0.0);
  return out;
}

QpcaReport qpca_sample(const HermitianOperator& M, const CVector& x, const QpcaOptions& opts, Rng& rng) {
  const int n = M.dim();
  if (x.size() != n) fail("input vector dimension mismatch");
  if (std::abs(x.norm() - 1.0) > 1e-10) fail("input vector must be unit norm");
  if (opts.shots < 1) fail("shots must be >= 1");

  QpcaReport r;
  r.bits = opts.bits;
  r.shots = opts.shots;
  const auto eig = linalg::eig_hermitian(M);
  r.eigenvalues = eig.values;
  for (int k = 0; k < n; ++k) r.overlaps.push_back(std::norm(eig.vectors.col(k).dot(x)));
  for (int k = 0; k < n; ++k) {
    double g = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (j != k) g = std::min(g, std::abs(eig.values[static_cast<size_t>(j)] - eig.values[static_cast<size_t>(k)]));
    r.gaps.push_back(g);
  }

  const double mx = M.max_entry();
  const int d = std::max(1, linalg::max_row_nonzeros(M.matrix(), 1e-12));
  r.scale = mx > 0.0 ? 1.0 / (2.0 * mx * d) : 1.0;
  const HermitianOperator scaled = M.scaled(r.scale);
  if (linalg::norm(scaled, linalg::NormKind::spectral) >= M_PI) fail("eigenphase wrap: ||s M|| >= pi");
  const double res = 2.0 * std::ldexp(1.0, -opts.bits) * kTwoPi;
  for (double g : r.gaps)
    if (n > 1 && g * r.scale < res) r.resolved = false;

  CMatrix U;
  if (opts.sim == SimMode::exact_exp) {
    U = linalg::operator_exp(scaled, 1.0);
  } else {
    auto cfg = opts.lcu;
    cfg.t = 1.0;
    const auto sparse = lcu::SparseHermitian::from_dense(scaled.matrix(), 1e-12);
    const auto oracle = lcu::NoisyMatrixOracle::random(sparse, cfg.eta, cfg.delta, rng, opts.placement);
    const auto sim = lcu::simulate_noisy(oracle, cfg);
    U = sim.Q;
    r.sigma_pert = linalg::norm(CMatrix(scaled.matrix() - sim.M_extracted.matrix()), linalg::NormKind::spectral) /
                   r.scale;
    r.charges = sim.charges;
  }
  r.qpe_applications = (std::uint64_t{1} << opts.bits) - 1;
  r.charges *= r.qpe_applications;

  const auto dist = qsim::phase_distribution(U, x, opts.bits);
  const auto counts = qsim::sample_counts(dist, opts.shots, rng);
  r.histogram.assign(static_cast<size_t>(n), 0.0);
  r.expected.assign(static_cast<size_t>(n), 0.0);
  const double m = std::ldexp(1.0, opts.bits);
  for (size_t y = 0; y < dist.size(); ++y) {
    const double e = qsim::eigenvalue_from_phase(static_cast<double>(y) / m) / r.scale;
    const size_t k = nearest(r.eigenvalues, e);
    r.expected[k] += dist[y];
    r.histogram[k] += static_cast<double>(counts[y]) / opts.shots;
  }
  for (int k = 0; k < n; ++k)
    r.lambda_measured =
        std::max(r.lambda_measured, std::abs(r.histogram[static_cast<size_t>(k)] - r.overlaps[static_cast<size_t>(k)]));
  return r;
}

PoisoningReport poisoning_experiment(const robust::RawDataset& data, const robust::ContaminationSpec& spec, double L) {
  if (!(spec.alpha >= 0.0 && spec.alpha < 0.5)) fail("alpha must lie in [0, 1/2)");
  if (!(L > 0.0) || spec.alpha * L > 1.0) fail("need L > 0 and alpha L <= 1");
  PoisoningReport r;
  r.alpha = spec.alpha;
  r.L = L;
  const auto bad = robust::poison(data, spec);
  const auto m = robust::robust_pca_matrix(data);
  const auto mp = robust::robust_pca_matrix(bad);
  r.d = linalg::max_row_nonzeros(m.matrix(), 1e-12);
  r.norm = linalg::norm(m - mp, linalg::NormKind::spectral);
  r.bound = 5.0 * spec.alpha * L * (r.d + 2);
  r.mean_norm = linalg::norm(robust::classical_pca_matrix(data) - robust::classical_pca_matrix(bad),
                             linalg::NormKind::spectral);
  return r;
}

void SubspaceSplit::validate(int dim) const {
  std::vector<int> all;
  for (const auto* g : {&plus, &minus, &unknown}) all.insert(all.end(), g->begin(), g->end());
  std::sort(all.begin(), all.end());
  if (static_cast<int>(all.size()) != dim) fail("split groups do not cover the spectrum");
  for (int i = 0; i < dim; ++i)
    if (all[static_cast<size_t>(i)] != i) fail("split groups overlap or leave gaps");
  if (plus.empty()) fail("plus band is empty");
  if (!(lambda > 0.0)) fail("split gap lambda must be positive");
}

SubspaceSplit make_split(const linalg::EigenDecomposition& eig, std::vector<int> plus, std::vector<int> minus) {
  const int n = eig.dim();
  SubspaceSplit s;
  std::sort(plus.begin(), plus.end());
  std::sort(minus.begin(), minus.end());
  s.plus = plus;
  s.minus = minus;
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(plus.begin(), plus.end(), i) && !std::binary_search(minus.begin(), minus.end(), i))
      s.unknown.push_back(i);
  s.lambda = std::numeric_limits<double>::infinity();
  for (int p : s.plus)
    for (int q = 0; q < n; ++q)
      if (!std::binary_search(s.plus.begin(), s.plus.end(), q))
        s.lambda = std::min(s.lambda, std::abs(eig.values[static_cast<size_t>(p)] - eig.values[static_cast<size_t>(q)]));
  if (s.plus.size() == static_cast<size_t>(n)) s.lambda = std::numeric_limits<double>::infinity();
  auto cols = [&](const std::vector<int>& idx) {
    CMatrix c(n, static_cast<Eigen::Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) c.col(static_cast<Eigen::Index>(j)) = eig.vectors.col(idx[j]);
    return c;
  };
  s.plus_vectors = cols(s.plus);
  s.minus_vectors = cols(s.minus);
  s.unknown_vectors = cols(s.unknown);
  s.validate(n);
  return s;
}

PerturbationReport projector_perturbation_check(const HermitianOperator& M, const HermitianOperator& Mp,
                                                const SubspaceSplit& split, const std::vector<CVector>& probes) {
  const int n = M.dim();
  if (Mp.dim() != n) fail("perturbed matrix dimension mismatch");
  split.validate(n);
  PerturbationReport r;
  r.lambda = split.lambda;
  r.sigma = linalg::norm(Mp - M, linalg::NormKind::spectral);
  r.bound = 4.0 * r.sigma / r.lambda;
  const auto e = linalg::eig_hermitian(M);
  const auto ep = linalg::eig_hermitian(Mp);
  for (int i = 0; i < n; ++i)
    r.weyl_shift = std::max(r.weyl_shift, std::abs(e.values[static_cast<size_t>(i)] - ep.values[static_cast<size_t>(i)]));
  r.weyl_ok = r.weyl_shift <= r.sigma * (1.0 + 1e-10) + 1e-13;

  // Degeneracy in the perturbed plus band (relative to its neighbours) makes
  // the band ambiguous only if it merges with an outside eigenvalue.
  bool degenerate = false;
  for (int p : split.plus)
    for (int q = 0; q < n; ++q)
      if (!std::binary_search(split.plus.begin(), split.plus.end(), q) &&
          std::abs(ep.values[static_cast<size_t>(p)] - ep.values[static_cast<size_t>(q)]) < 1e-12)
        degenerate = true;
  CMatrix pp = CMatrix::Zero(n, n);
  for (int p : split.plus) pp += ep.vectors.col(p) * ep.vectors.col(p).adjoint();
  const CMatrix diff = pp - split.projector_plus();
  for (const auto& phi : probes) {
    if (degenerate) {
      ++r.skipped;
      continue;
    }
    ++r.probes;
    r.max_projector_shift = std::max(r.max_projector_shift, std::abs(phi.dot(diff * phi)));
  }
  return r;
}

std::vector<double> first_order_remainders(const HermitianOperator& M, const HermitianOperator& Delta,
                                           const std::vector<double>& sigmas) {
  const auto e = linalg::eig_hermitian(M);
  const int n = M.dim();
  std::vector<double> first(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const CVector v = e.vectors.col(k);
    first[static_cast<size_t>(k)] = v.dot(Delta.matrix() * v).real();
  }
  std::vector<double> out;
  for (double s : sigmas) {
    const auto ep = linalg::eig_hermitian(M + Delta.scaled(s));
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const size_t i = static_cast<size_t>(k);
      worst = std::max(worst, std::abs(ep.values[i] - e.values[i] - s * first[i]));
    }
    out.push_back(worst);
  }
  return out;
}

ChiSquare multinomial_test(const std::vector<double>& freq, const std::vector<double>& probs, int shots,
                           double sigmas, double min_expected) {
  if (freq.size() != probs.size() || freq.empty()) fail("chi-square needs matched nonempty bins");
  if (shots < 1) fail("chi-square needs shots >= 1");
  std::vector<double> obs, exp;
  double pool_o = 0.0, pool_e = 0.0;
  for (size_t i = 0; i < freq.size(); ++i) {
    const double e = probs[i] * shots;
    if (e < min_expected) {
      pool_o += freq[i] * shots;
      pool_e += e;
    } else {
      obs.push_back(freq[i] * shots);
      exp.push_back(e);
    }
  }
  if (pool_e > 0.0 || pool_o > 0.0) {
    obs.push_back(pool_o);
    exp.push_back(std::max(pool_e, 1e-300));
  }
  ChiSquare c;
  for (size_t i = 0; i < obs.size(); ++i) c.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  c.dof = std::max(1, static_cast<int>(obs.size()) - 1);
  const double level = 2.0 * boost::math::cdf(boost::math::normal(), sigmas) - 1.0;
  c.critical = boost::math::quantile(boost::math::chi_squared(c.dof), level);
  return c;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail("slope needs >= 2 matched points");
  std::vector<double> lx, ly;
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) fail("slope needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

RMatrix gapped_instance(int dim, double min_gap, Rng& rng) {
  if (dim < 2 || dim % 2 != 0) fail("instance dimension must be even and >= 2");
  const double span = 1.9;
  const double step = span / (dim - 1);
  if (step < min_gap) fail("requested gap does not fit in [-0.95, 0.95]");
  const double jitter = (step - min_gap) / 2.0;
  std::vector<double> e(static_cast<size_t>(dim));
  for (int k = 0; k < dim; ++k) e[static_cast<size_t>(k)] = -0.95 + k * step + uniform(rng, -jitter, jitter);
  std::shuffle(e.begin(), e.end(), rng);
  std::vector<int> perm(static_cast<size_t>(dim));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  RMatrix m = RMatrix::Zero(dim, dim);
  for (int b = 0; b < dim; b += 2) {
    const double th = uniform(rng, 0.2, M_PI / 2.0 - 0.2);
    const double c = std::cos(th), s = std::sin(th);
    const double a = e[static_cast<size_t>(b)], z = e[static_cast<size_t>(b) + 1];
    const int i = perm[static_cast<size_t>(b)], j = perm[static_cast<size_t>(b) + 1];
    m(i, i) = c * c * a + s * s * z;
    m(j, j) = s * s * a + c * c * z;
    m(i, j) = m(j, i) = c * s * (a - z);
  }
  return m;
}

RMatrix dense_with_spectrum(const std::vector<double>& values, Rng& rng) {
  const int n = static_cast<int>(values.size());
  RMatrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  Eigen::HouseholderQR<RMatrix> qr(g);
  const RMatrix q = qr.householderQ();
  RVector v(n);
  for (int i = 0; i < n; ++i) v(i) = values[static_cast<size_t>(i)];
  const RMatrix m = q * v.asDiagonal() * q.transpose();
  return (m + m.transpose()) / 2.0;
}

CVector random_unit_vector(int dim, Rng& rng) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v / v.norm();
}

}  // namespace aqml::qpca
