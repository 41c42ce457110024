#include "aqml/lcu.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "aqml/error.hpp"

namespace aqml::lcu {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("lcu-taylor", msg); }

Complex phase_of(Complex x) {
  const double a = std::abs(x);
  return a > 0.0 ? x / a : Complex(1.0, 0.0);
}

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

SparseHermitian SparseHermitian::from_dense(const CMatrix& m, double threshold) {
  if (m.rows() != m.cols() || m.rows() < 1) fail("sparse Hermitian matrix must be square and nonempty");
  if (m.rows() > linalg::kMaxDim) fail("dimension exceeds the desk-scale limit");
  if (!linalg::is_hermitian(m, 1e-12)) fail("matrix is not Hermitian (asymmetric accessor)");
  SparseHermitian s;
  const int n = static_cast<int>(m.rows());
  s.dense_ = CMatrix::Zero(n, n);
  s.cols_.assign(static_cast<size_t>(n), {});
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      // Decide on the upper triangle so the pattern is symmetric.
      const Complex v = p <= q ? m(p, q) : std::conj(m(q, p));
      if (std::abs(v) <= threshold) continue;
      s.dense_(p, q) = p == q ? Complex(v.real(), 0.0) : v;
      s.cols_[static_cast<size_t>(p)].push_back(q);
      s.max_norm_ = std::max(s.max_norm_, std::abs(v));
    }
  for (const auto& c : s.cols_) s.d_ = std::max(s.d_, static_cast<int>(c.size()));
  if (s.max_norm_ > 1.0 + 1e-12) fail("max norm exceeds 1");
  return s;
}

SparseHermitian::Entry SparseHermitian::entry(int p, int j) const {
  if (p < 0 || p >= dim()) fail("row out of range");
  const auto& c = cols_[static_cast<size_t>(p)];
  if (j < 0 || j >= static_cast<int>(c.size())) fail("nonzero index out of range");
  const int q = c[static_cast<size_t>(j)];
  return {q, dense_(p, q)};
}

CMatrix OneSparseTerm::dense() const {
  const int n = static_cast<int>(partner.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (int p = 0; p < n; ++p)
    if (partner[static_cast<size_t>(p)] >= 0) m(p, partner[static_cast<size_t>(p)]) = value[static_cast<size_t>(p)];
  return m;
}

CMatrix OneSparseDecomposition::sum() const {
  CMatrix m = CMatrix::Zero(dim, dim);
  for (const auto& t : terms) m += t.dense();
  return m;
}

OneSparseDecomposition one_sparse_decompose(const CMatrix& h, double threshold) {
  if (h.rows() != h.cols()) fail("decomposition needs a square matrix");
  if (!linalg::is_hermitian(h, 1e-12)) fail("matrix is not Hermitian (asymmetric accessor)");
  const int n = static_cast<int>(h.rows());
  OneSparseDecomposition out;
  out.dim = n;

  OneSparseTerm diag;
  diag.diagonal = true;
  diag.partner.assign(static_cast<size_t>(n), -1);
  diag.value.assign(static_cast<size_t>(n), Complex(0.0));
  bool any_diag = false;
  for (int p = 0; p < n; ++p)
    if (std::abs(h(p, p)) > threshold) {
      diag.partner[static_cast<size_t>(p)] = p;
      diag.value[static_cast<size_t>(p)] = Complex(h(p, p).real(), 0.0);
      any_diag = true;
    }
  if (any_diag) out.terms.push_back(diag);

  // Greedy edge coloring: each edge takes the smallest color free at both ends.
  std::vector<std::vector<int>> used(static_cast<size_t>(n));
  std::vector<OneSparseTerm> colored;
  for (int p = 0; p < n; ++p)
    for (int q = p + 1; q < n; ++q) {
      const Complex v = h(p, q);
      if (std::abs(v) <= threshold) continue;
      auto& up = used[static_cast<size_t>(p)];
      auto& uq = used[static_cast<size_t>(q)];
      int c = 0;
      while (std::find(up.begin(), up.end(), c) != up.end() || std::find(uq.begin(), uq.end(), c) != uq.end()) ++c;
      up.push_back(c);
      uq.push_back(c);
      if (c >= static_cast<int>(colored.size())) {
        OneSparseTerm t;
        t.partner.assign(static_cast<size_t>(n), -1);
        t.value.assign(static_cast<size_t>(n), Complex(0.0));
        colored.resize(static_cast<size_t>(c) + 1, t);
      }
      auto& t = colored[static_cast<size_t>(c)];
      t.partner[static_cast<size_t>(p)] = q;
      t.partner[static_cast<size_t>(q)] = p;
      t.value[static_cast<size_t>(p)] = v;
      t.value[static_cast<size_t>(q)] = std::conj(v);
    }
  for (auto& t : colored) out.terms.push_back(std::move(t));
  for (size_t j = 0; j < out.terms.size(); ++j) out.terms[j].color = static_cast<int>(j);
  return out;
}

OneSparseDecomposition one_sparse_decompose(const SparseHermitian& h) { return one_sparse_decompose(h.dense()); }

int discretized_sign(double abs_value, double max_norm, long m, long M) {
  const bool flip = abs_value * static_cast<double>(M) < static_cast<double>(m) * max_norm;
  return flip && (m % 2 != 0) ? -1 : 1;
}

double sign_average(double abs_value, double max_norm, long M) {
  if (M < 1) fail("M_disc must be >= 1");
  if (!(max_norm > 0.0)) fail("max norm must be positive");
  // k = #{m : |x| M >= m max}; those summands are +1, the rest alternate.
  const double xm = abs_value * static_cast<double>(M);
  long k = static_cast<long>(std::clamp(std::floor(xm / max_norm), 0.0, static_cast<double>(M)));
  while (k < M && !(xm < static_cast<double>(k + 1) * max_norm)) ++k;
  while (k > 0 && xm < static_cast<double>(k) * max_norm) --k;
  const long rest = M - k;
  const long tail = rest % 2 == 0 ? 0 : (M % 2 == 0 ? 1 : -1);
  return static_cast<double>(k + tail) / static_cast<double>(M);
}

CMatrix SignSummand::dense() const {
  const int n = static_cast<int>(partner.size());
  CMatrix m = CMatrix::Zero(n, n);
  for (int p = 0; p < n; ++p)
    if (partner[static_cast<size_t>(p)] >= 0) m(p, partner[static_cast<size_t>(p)]) = coeff[static_cast<size_t>(p)];
  return m;
}

std::vector<SignSummand> sign_decompose(const OneSparseTerm& term, double max_norm, long M_disc) {
  if (M_disc < 1) fail("M_disc must be >= 1");
  std::vector<SignSummand> out;
  if (!(max_norm > 0.0)) return out;
  for (size_t p = 0; p < term.value.size(); ++p)
    if (term.partner[p] >= 0 && std::abs(term.value[p]) > max_norm * (1.0 + 1e-12))
      fail("term entry exceeds the max norm");
  out.reserve(static_cast<size_t>(M_disc));
  for (long m = 1; m <= M_disc; ++m) {
    SignSummand s;
    s.partner = term.partner;
    s.coeff.assign(term.value.size(), Complex(0.0));
    for (size_t p = 0; p < term.value.size(); ++p)
      if (term.partner[p] >= 0)
        s.coeff[p] = phase_of(term.value[p]) *
                     static_cast<double>(discretized_sign(std::abs(term.value[p]), max_norm, m, M_disc));
    out.push_back(std::move(s));
  }
  return out;
}

Complex discretize_entry(Complex x, double max_norm, long M_disc) {
  if (!(max_norm > 0.0)) return Complex(0.0);
  return max_norm * phase_of(x) * sign_average(std::abs(x), max_norm, M_disc);
}

HermitianOperator discretized_hamiltonian(const SparseHermitian& h, long M_disc) {
  const int n = h.dim();
  CMatrix m = CMatrix::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int j = 0; j < h.row_count(p); ++j) {
      const auto e = h.entry(p, j);
      if (e.col < p) continue;
      const Complex v = discretize_entry(e.value, h.max_norm(), M_disc);
      m(p, e.col) = v;
      m(e.col, p) = std::conj(v);
    }
  return HermitianOperator::symmetrized(m);
}

double truncation_bound(double norm_t, int K) {
  double term = 1.0;
  for (int q = 1; q <= K + 1; ++q) term *= norm_t / q;
  return term * std::exp(norm_t);
}

TaylorSegment taylor_segment(const HermitianOperator& h, double t, int K) {
  if (K < 0) fail("truncation order must be >= 0");
  const double nt = linalg::norm(h, linalg::NormKind::spectral) * std::abs(t);
  if (nt > kLn2 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "segment too long: ||H|| t = " << nt << " exceeds ln 2";
    fail(os.str());
  }
  const int n = h.dim();
  const CMatrix step = Complex(0.0, -t) * h.matrix();
  CMatrix term = CMatrix::Identity(n, n);
  CMatrix sum = term;
  for (int q = 1; q <= K; ++q) {
    term = (term * step) / static_cast<double>(q);
    sum += term;
  }
  TaylorSegment s;
  s.op = sum;
  const auto sv = linalg::singular_values(sum);
  s.success_amplitude = *std::min_element(sv.begin(), sv.end());
  s.error_bound = truncation_bound(nt, K);
  return s;
}

NoisyMatrixOracle NoisyMatrixOracle::random(const SparseHermitian& h, double eta, double delta, Rng& rng,
                                            FailurePlacement placement, int good_outcomes) {
  if (!(eta >= 0.0)) fail("eta must be >= 0");
  if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
  if (good_outcomes < 1) fail("need at least one good outcome");
  NoisyMatrixOracle o;
  o.h_ = h;
  o.eta_ = eta;
  o.delta_ = delta;
  const int n = h.dim();
  o.table_.resize(static_cast<size_t>(n));
  o.cols_.resize(static_cast<size_t>(n));
  for (int p = 0; p < n; ++p)
    for (int j = 0; j < h.row_count(p); ++j) {
      const auto e = h.entry(p, j);
      if (e.col < p) continue;
      const bool real = p == e.col || e.value.imag() == 0.0;
      const double dpq = placement == FailurePlacement::worst_case ? delta : uniform(rng, 0.0, delta);
      std::vector<Outcome> out;
      double wsum = 0.0;
      for (int k = 0; k < good_outcomes; ++k) {
        Complex noise;
        if (real)
          noise = eta * uniform(rng, -1.0, 1.0);
        else
          noise = std::polar(eta * uniform01(rng), uniform(rng, -M_PI, M_PI));
        const double w = uniform(rng, 0.05, 1.0);
        wsum += w;
        out.push_back({e.value + noise, w, true});
      }
      for (auto& x : out) x.weight *= (1.0 - dpq) / wsum;
      if (dpq > 0.0) {
        const Complex bad = -phase_of(e.value) * h.max_norm();
        out.push_back({bad, dpq, std::abs(bad - e.value) <= eta});
      }
      o.table_[static_cast<size_t>(p)].push_back(std::move(out));
      o.cols_[static_cast<size_t>(p)].push_back(e.col);
    }
  return o;
}

const std::vector<NoisyMatrixOracle::Outcome>& NoisyMatrixOracle::outcomes(int p, int q) const {
  if (p > q) std::swap(p, q);
  if (p < 0 || q >= h_.dim()) fail("oracle index out of range");
  const auto& c = cols_[static_cast<size_t>(p)];
  const auto it = std::lower_bound(c.begin(), c.end(), q);
  if (it == c.end() || *it != q) fail("oracle queried outside the sparsity pattern");
  return table_[static_cast<size_t>(p)][static_cast<size_t>(it - c.begin())];
}

Complex NoisyMatrixOracle::sample(int p, int q, Rng& rng) const {
  const auto& o = outcomes(p, q);
  double u = uniform01(rng);
  Complex v = o.back().value;
  for (const auto& x : o) {
    if (u < x.weight) {
      v = x.value;
      break;
    }
    u -= x.weight;
  }
  return p <= q ? v : std::conj(v);
}

HermitianOperator expected_hamiltonian(const NoisyMatrixOracle& oracle, long M_disc) {
  const auto& h = oracle.matrix();
  const int n = h.dim();
  CMatrix m = CMatrix::Zero(n, n);
  for (int p = 0; p < n; ++p)
    for (int j = 0; j < h.row_count(p); ++j) {
      const int q = h.entry(p, j).col;
      if (q < p) continue;
      Complex v(0.0);
      for (const auto& o : oracle.outcomes(p, q)) {
        Complex y = o.value;
        if (p == q) y = Complex(y.real(), 0.0);
        v += o.weight * discretize_entry(y, h.max_norm(), M_disc);
      }
      m(p, q) = v;
      m(q, p) = std::conj(v);
    }
  return HermitianOperator::symmetrized(m);
}

HermitianOperator sampled_hamiltonian(const NoisyMatrixOracle& oracle, long M_disc, int trials, Rng& rng) {
  if (trials < 1) fail("trials must be >= 1");
  const auto& h = oracle.matrix();
  const int n = h.dim();
  CMatrix m = CMatrix::Zero(n, n);
  for (int t = 0; t < trials; ++t)
    for (int p = 0; p < n; ++p)
      for (int j = 0; j < h.row_count(p); ++j) {
        const int q = h.entry(p, j).col;
        if (q < p) continue;
        Complex y = oracle.sample(p, q, rng);
        if (p == q) y = Complex(y.real(), 0.0);
        const Complex v = discretize_entry(y, h.max_norm(), M_disc);
        m(p, q) += v;
        if (q != p) m(q, p) += std::conj(v);
      }
  return HermitianOperator::symmetrized(m / static_cast<double>(trials));
}

void TaylorConfig::validate() const {
  if (K < 0) fail("K must be >= 1 (0 selects automatically)");
  if (r < 0) fail("r must be >= 1 (0 selects automatically)");
  if (M_disc < 0) fail("M_disc must be >= 1 (0 selects automatically)");
  if (!(eta >= 0.0)) fail("eta must be >= 0");
  if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
  if (t == 0.0 || !std::isfinite(t)) fail("evolution time must be finite and nonzero");
  if (!(target_error > 0.0)) fail("target error must be positive");
  if (M_disc > 0 && delta > delta_constant / static_cast<double>(M_disc)) {
    std::ostringstream os;
    os << "delta = " << delta << " exceeds " << delta_constant << "/M_disc = "
       << delta_constant / static_cast<double>(M_disc);
    fail(os.str());
  }
}

HermitianOperator extract_effective_hamiltonian(const CMatrix& Q, double t) {
  if (t == 0.0) fail("extraction needs t != 0");
  if (Q.rows() != Q.cols()) fail("extraction needs a square operator");
  Eigen::JacobiSVD<CMatrix> svd(Q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double off = std::max(std::abs(s.maxCoeff() - 1.0), std::abs(s.minCoeff() - 1.0));
  if (off > 0.1) {
    std::ostringstream os;
    os << "operator is " << off << " from unitary (limit 0.1)";
    fail(os.str());
  }
  const CMatrix U = svd.matrixU() * svd.matrixV().adjoint();
  // U is normal, so its Schur form is diagonal up to rounding.
  Eigen::ComplexSchur<CMatrix> schur(U);
  const CMatrix& T = schur.matrixT();
  const CMatrix& Z = schur.matrixU();
  const int n = static_cast<int>(U.rows());
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) {
    const double ph = std::arg(T(i, i));
    if (std::abs(ph) >= M_PI - 0.1) {
      std::ostringstream os;
      os << "eigenphase " << ph << " too close to the branch cut; unwrap is ambiguous";
      fail(os.str());
    }
    h(i) = -ph / t;
  }
  const CMatrix H = Z * h.cast<Complex>().asDiagonal() * Z.adjoint();
  if (!linalg::is_hermitian(H, 1e-8)) fail("extracted generator is not Hermitian");
  return HermitianOperator::symmetrized(H);
}

NoisySimulation simulate_noisy(const NoisyMatrixOracle& oracle, TaylorConfig cfg) {
  cfg.validate();
  const auto& h = oracle.matrix();
  if (cfg.eta != oracle.eta() || cfg.delta != oracle.delta()) fail("config eta/delta disagree with the oracle");
  const double mx = h.max_norm();
  const auto dec = one_sparse_decompose(h);
  NoisySimulation s;
  s.colors = dec.size();
  s.d = linalg::max_row_nonzeros(h.dense());
  if (cfg.M_disc == 0) {
    const double scale = std::max(cfg.eta, mx * cfg.delta);
    cfg.M_disc = scale > 0.0 ? static_cast<long>(std::ceil(10.0 * mx / scale)) : 1024;
    cfg.M_disc = std::max(cfg.M_disc, 1L);
  }
  cfg.validate();
  const double norm_t = std::abs(cfg.t) * mx * std::max(1, s.colors);
  if (cfg.r == 0) cfg.r = std::max(1, static_cast<int>(std::ceil(norm_t / kLn2 - 1e-12)));
  const double seg = norm_t / cfg.r;
  auto total_bound = [&](int K) { return std::expm1(cfg.r * std::log1p(truncation_bound(seg, K))); };
  if (cfg.K == 0) {
    cfg.K = 1;
    while (total_bound(cfg.K) > cfg.target_error && cfg.K < 60) ++cfg.K;
  }
  s.K = cfg.K;
  s.r = cfg.r;
  s.M_disc = cfg.M_disc;
  s.M_tilde = mx > 0.0 ? expected_hamiltonian(oracle, cfg.M_disc) : HermitianOperator::zero(h.dim());
  const auto segment = taylor_segment(s.M_tilde, cfg.t / cfg.r, cfg.K);
  const int n = h.dim();
  s.Q = CMatrix::Identity(n, n);
  for (int i = 0; i < cfg.r; ++i) {
    s.Q = segment.op * s.Q;
    s.success_amplitude *= segment.success_amplitude;
  }
  s.truncation_bound = total_bound(cfg.K);
  s.evolution_error = linalg::norm(CMatrix(s.Q - linalg::operator_exp(s.M_tilde, cfg.t)), linalg::NormKind::spectral);
  s.unitarity_drift =
      linalg::norm(CMatrix(s.Q.adjoint() * s.Q - CMatrix::Identity(n, n)), linalg::NormKind::spectral);
  s.M_extracted = extract_effective_hamiltonian(s.Q, cfg.t);
  s.norm_error = linalg::norm(CMatrix(h.dense() - s.M_extracted.matrix()), linalg::NormKind::spectral);
  s.bound_unit = s.d * (mx * cfg.delta + cfg.eta);
  s.charges = static_cast<std::uint64_t>(cfg.r) * static_cast<std::uint64_t>(cfg.K);
  return s;
}

CMatrix random_sparse_instance(int dim, int d, double scale, Rng& rng) {
  if (dim < 2 || dim % 2 != 0) fail("instance dimension must be even and >= 2");
  if (d < 1 || d > dim) fail("sparsity out of range");
  if (!(scale > 0.0 && scale <= 1.0)) fail("scale must lie in (0, 1]");
  CMatrix m = CMatrix::Zero(dim, dim);
  for (int p = 0; p < dim; ++p) m(p, p) = uniform(rng, -1.0, 1.0);
  std::vector<int> perm(static_cast<size_t>(dim));
  for (int layer = 1; layer < d; ++layer) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      bool clash = false;
      for (int i = 0; i < dim && !clash; i += 2)
        clash = m(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(i) + 1]) != Complex(0.0);
      if (clash) continue;
      for (int i = 0; i < dim; i += 2) {
        const double v = uniform(rng, -1.0, 1.0);
        m(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(i) + 1]) = v;
        m(perm[static_cast<size_t>(i) + 1], perm[static_cast<size_t>(i)]) = v;
      }
      placed = true;
    }
    if (!placed) fail("could not place a disjoint matching");
  }
  const double peak = m.cwiseAbs().maxCoeff();
  return m * (scale / peak);
}

}  // namespace aqml::lcu
