#include "aqml/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "aqml/error.hpp"

namespace aqml::linalg {

namespace {

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw Error("numerics-core", os.str());
  }
  if (m.rows() > kMaxDim) {
    std::ostringstream os;
    os << what << ": dimension " << m.rows() << " exceeds cap " << kMaxDim;
    throw Error("numerics-core", os.str());
  }
}

double hermitian_defect(const CMatrix& m) {
  double worst = 0.0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r <= c; ++r)
      worst = std::max(worst, std::abs(m(r, c) - std::conj(m(c, r))));
  return worst;
}

double off_diagonal_mass(const CMatrix& a) {
  double s = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r)
      if (r != c) s += std::norm(a(r, c));
  return std::sqrt(s);
}

}  // namespace

HermitianOperator::HermitianOperator(const CMatrix& m, double tol) {
  require_square(m, "HermitianOperator");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double defect = hermitian_defect(m);
  if (defect > tol * scale) {
    std::ostringstream os;
    os << "matrix is not Hermitian: max |m(r,c) - conj(m(c,r))| = " << defect;
    throw Error("numerics-core", os.str());
  }
  m_ = 0.5 * (m + m.adjoint());
}

HermitianOperator HermitianOperator::from_real(const RMatrix& m, double tol) {
  return HermitianOperator(m.cast<Complex>(), tol);
}

HermitianOperator HermitianOperator::symmetrized(const CMatrix& m) {
  require_square(m, "HermitianOperator::symmetrized");
  HermitianOperator h;
  h.m_ = 0.5 * (m + m.adjoint());
  return h;
}

HermitianOperator HermitianOperator::zero(int dim) {
  return symmetrized(CMatrix::Zero(dim, dim));
}

HermitianOperator HermitianOperator::identity(int dim) {
  return symmetrized(CMatrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
  return symmetrized(m_ + o.m_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
  return symmetrized(m_ - o.m_);
}

HermitianOperator HermitianOperator::scaled(double s) const { return symmetrized(s * m_); }

double HermitianOperator::max_entry() const { return m_.cwiseAbs().maxCoeff(); }

CMatrix EigenDecomposition::reconstruct() const {
  RVector d = Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return vectors * d.cast<Complex>().asDiagonal() * vectors.adjoint();
}

EigenDecomposition eig_hermitian(const HermitianOperator& h) {
  const Eigen::Index n = h.dim();
  CMatrix a = h.matrix();
  CMatrix v = CMatrix::Identity(n, n);

  const double frob = a.norm();
  const double target = 1e-14 * frob;
  double off = off_diagonal_mass(a);
  double previous_off = std::numeric_limits<double>::infinity();

  for (int sweep = 0; sweep < 100 && off > target; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex z = a(p, q);
        const double mag = std::abs(z);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Entries far below both diagonal magnitudes cannot change them.
        if (sweep > 3 && std::abs(app) + 1e3 * mag == std::abs(app) &&
            std::abs(aqq) + 1e3 * mag == std::abs(aqq)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        const Complex phase = z / mag;  // e^{i phi}
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // G = diag(1, e^{-i phi}) * [[c, s], [-s, c]]
        const Complex gpp = c;
        const Complex gpq = s;
        const Complex gqp = -s * std::conj(phase);
        const Complex gqq = c * std::conj(phase);

        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex ap = a(k, p);
          const Complex aq = a(k, q);
          a(k, p) = ap * gpp + aq * gqp;
          a(k, q) = ap * gpq + aq * gqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex ap = a(p, k);
          const Complex aq = a(q, k);
          a(p, k) = std::conj(gpp) * ap + std::conj(gqp) * aq;
          a(q, k) = std::conj(gpq) * ap + std::conj(gqq) * aq;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Complex vp = v(k, p);
          const Complex vq = v(k, q);
          v(k, p) = vp * gpp + vq * gqp;
          v(k, q) = vp * gpq + vq * gqq;
        }
      }
    }
    previous_off = off;
    off = off_diagonal_mass(a);
    // Rounding floor reached: further sweeps only shuffle noise.
    if (off >= previous_off && off <= 1e-11 * frob) break;
  }

  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    return a(x, x).real() < a(y, y).real();
  });

  EigenDecomposition out;
  out.values.resize(static_cast<size_t>(n));
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<size_t>(i)];
    out.values[static_cast<size_t>(i)] = a(src, src).real();
    CVector col = v.col(src);
    const double peak = col.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (std::abs(col(k)) > 1e-8 * peak) {
        col *= std::conj(col(k)) / std::abs(col(k));
        col(k) = std::abs(col(k));
        break;
      }
    }
    out.vectors.col(i) = col;
  }
  return out;
}

CMatrix operator_exp(const EigenDecomposition& eig, double t) {
  CVector phases(eig.dim());
  for (int i = 0; i < eig.dim(); ++i)
    phases(i) = std::exp(Complex(0.0, -eig.values[static_cast<size_t>(i)] * t));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

CMatrix operator_exp(const HermitianOperator& h, double t) {
  return operator_exp(eig_hermitian(h), t);
}

std::vector<double> singular_values(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

double norm(const HermitianOperator& a, NormKind kind) {
  if (kind == NormKind::max_entry) return a.max_entry();
  const auto eig = eig_hermitian(a);
  if (kind == NormKind::spectral)
    return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
  double s = 0.0;
  for (double e : eig.values) s += std::abs(e);
  return s;
}

double norm(const CMatrix& a, NormKind kind) {
  require_square(a, "norm");
  if (kind == NormKind::max_entry) return a.cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (hermitian_defect(a) <= kHermitianTol * scale)
    return norm(HermitianOperator::symmetrized(a), kind);
  const auto s = singular_values(a);
  if (kind == NormKind::spectral) return s.empty() ? 0.0 : s.front();
  return std::accumulate(s.begin(), s.end(), 0.0);
}

bool is_hermitian(const CMatrix& m, double tol) {
  return m.rows() == m.cols() && hermitian_defect(m) <= tol;
}

bool is_unitary(const CMatrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  const CMatrix g = u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols());
  return g.cwiseAbs().maxCoeff() <= tol;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
  return out;
}

int max_row_nonzeros(const CMatrix& m, double threshold) {
  int best = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    int count = 0;
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (std::abs(m(r, c)) > threshold) ++count;
    best = std::max(best, count);
  }
  return best;
}

}  // namespace aqml::linalg
