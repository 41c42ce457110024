#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace aqml::linalg {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Desk-scale contract: larger operators are rejected.
inline constexpr int kMaxDim = 4096;
inline constexpr double kHermitianTol = 1e-12;

/// Dense complex matrix known to equal its own conjugate transpose.
///
/// Construction validates symmetry entrywise against `tol` scaled by
/// max(1, max |entry|); the stored matrix is then exactly symmetrized so
/// downstream code can rely on bitwise Hermiticity.
class HermitianOperator {
public:
  HermitianOperator() = default;
  explicit HermitianOperator(const CMatrix& m, double tol = kHermitianTol);

  static HermitianOperator from_real(const RMatrix& m, double tol = kHermitianTol);
  /// (m + m^dagger) / 2 without validation.
  static HermitianOperator symmetrized(const CMatrix& m);
  static HermitianOperator zero(int dim);
  static HermitianOperator identity(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }

  HermitianOperator operator+(const HermitianOperator& o) const;
  HermitianOperator operator-(const HermitianOperator& o) const;
  HermitianOperator scaled(double s) const;

  double max_entry() const;

private:
  CMatrix m_;
};

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column n is the eigenvector for values[n]

  int dim() const { return static_cast<int>(values.size()); }
  CVector vector(int n) const { return vectors.col(n); }
  CMatrix reconstruct() const;
};

/// Cyclic complex Jacobi. Eigenvalues ascending; each eigenvector is
/// rephased so its first non-negligible component is real and positive.
EigenDecomposition eig_hermitian(const HermitianOperator& h);

/// exp(-i H t) through the eigendecomposition.
CMatrix operator_exp(const HermitianOperator& h, double t);
CMatrix operator_exp(const EigenDecomposition& eig, double t);

enum class NormKind { spectral, trace, max_entry };

/// Spectral and trace norms go through the Hermitian eigensolver when the
/// input is Hermitian and through an SVD otherwise.
double norm(const CMatrix& a, NormKind kind);
double norm(const HermitianOperator& a, NormKind kind);

std::vector<double> singular_values(const CMatrix& a);

bool is_hermitian(const CMatrix& m, double tol);
bool is_unitary(const CMatrix& u, double tol);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// Number of entries in the densest row with |entry| > threshold.
int max_row_nonzeros(const CMatrix& m, double threshold = 1e-12);

}  // namespace aqml::linalg
