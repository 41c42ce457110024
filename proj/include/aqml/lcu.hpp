#pragma once

#include <cstdint>
#include <vector>

#include "aqml/linalg.hpp"
#include "aqml/rng.hpp"

namespace aqml::lcu {

using linalg::CMatrix;
using linalg::Complex;
using linalg::HermitianOperator;

/// Sparse Hermitian matrix with row adjacency lists. Entry accessor
/// entry(p, j) returns the j-th nonzero of row p.
class SparseHermitian {
public:
  SparseHermitian() = default;
  /// Entries with |value| <= threshold are dropped. Throws if `m` is not
  /// Hermitian or ||m||_max > 1.
  static SparseHermitian from_dense(const CMatrix& m, double threshold = 1e-14);

  int dim() const { return static_cast<int>(dense_.rows()); }
  int sparsity() const { return d_; }  // max nonzeros per row, diagonal included
  double max_norm() const { return max_norm_; }
  const CMatrix& dense() const { return dense_; }
  int row_count(int p) const { return static_cast<int>(cols_[static_cast<size_t>(p)].size()); }

  struct Entry {
    int col;
    Complex value;
  };
  Entry entry(int p, int j) const;

private:
  CMatrix dense_;
  std::vector<std::vector<int>> cols_;
  int d_ = 0;
  double max_norm_ = 0.0;
};

/// Hermitian matrix with at most one nonzero per row and column.
/// partner[p] is the column of row p's nonzero (-1 if none).
struct OneSparseTerm {
  int color = 0;
  bool diagonal = false;
  std::vector<int> partner;
  std::vector<Complex> value;

  CMatrix dense() const;
};

struct OneSparseDecomposition {
  int dim = 0;
  std::vector<OneSparseTerm> terms;

  CMatrix sum() const;
  int size() const { return static_cast<int>(terms.size()); }
};

/// Diagonal isolated into one term, off-diagonal edges greedily colored.
OneSparseDecomposition one_sparse_decompose(const SparseHermitian& h);
/// Same for an arbitrary Hermitian support pattern.
OneSparseDecomposition one_sparse_decompose(const CMatrix& h, double threshold = 1e-14);

/// Sign of summand m (1-based) for |x| relative to the max norm:
/// (-1)^{m [ |x| M < m max ]}.
int discretized_sign(double abs_value, double max_norm, long m, long M);
/// (1/M) sum_m sign, closed form.
double sign_average(double abs_value, double max_norm, long M);

/// One signed unitary: row p maps to partner[p] with coefficient coeff[p]
/// (a sign times the entry phase).
struct SignSummand {
  std::vector<int> partner;
  std::vector<Complex> coeff;

  CMatrix dense() const;
};

/// The M_disc signed one-sparse unitaries whose average is term / max_norm
/// up to O(1/M_disc) per entry. Empty for max_norm == 0.
std::vector<SignSummand> sign_decompose(const OneSparseTerm& term, double max_norm, long M_disc);

/// Discretized value of one entry: max_norm * phase(x) * sign_average(|x|).
Complex discretize_entry(Complex x, double max_norm, long M_disc);
/// Hamiltonian implemented by the noiseless sign-discretized LCU.
HermitianOperator discretized_hamiltonian(const SparseHermitian& h, long M_disc);

struct TaylorSegment {
  CMatrix op;
  double success_amplitude = 1.0;  // smallest singular value of op
  double error_bound = 0.0;        // (||H|| t)^{K+1}/(K+1)! e^{||H|| t}
};

double truncation_bound(double norm_t, int K);
/// Sum_{q <= K} (-i H t)^q / q!. Throws if ||H|| |t| > ln 2.
TaylorSegment taylor_segment(const HermitianOperator& h, double t, int K);

enum class FailurePlacement { worst_case, random };

/// Per-entry oracle outcome distribution. Outcomes are shared by (p, q) and
/// (q, p) (conjugated) so every draw is Hermitian.
class NoisyMatrixOracle {
public:
  struct Outcome {
    Complex value;
    double weight;
    bool good;  // within eta of the true entry
  };

  /// Good outcomes carry total weight 1 - delta_pq and lie within eta of the
  /// entry; failures carry delta_pq (= delta for worst_case, U[0, delta]
  /// otherwise) and report the opposite-sign extreme value.
  static NoisyMatrixOracle random(const SparseHermitian& h, double eta, double delta, Rng& rng,
                                  FailurePlacement placement = FailurePlacement::worst_case,
                                  int good_outcomes = 3);

  double eta() const { return eta_; }
  double delta() const { return delta_; }
  const SparseHermitian& matrix() const { return h_; }
  /// Outcomes for (p, q) with p <= q.
  const std::vector<Outcome>& outcomes(int p, int q) const;
  Complex sample(int p, int q, Rng& rng) const;

private:
  SparseHermitian h_;
  double eta_ = 0.0, delta_ = 0.0;
  std::vector<std::vector<std::vector<Outcome>>> table_;  // table_[p][j] for cols_[p][j] >= p
  std::vector<std::vector<int>> cols_;
};

/// Average Hamiltonian over the oracle ensemble:
/// max_norm * sum_k w_k phase(Y_k) sign_average(|Y_k|) per entry.
HermitianOperator expected_hamiltonian(const NoisyMatrixOracle& oracle, long M_disc);
/// Mean of `trials` independently sampled discretized Hamiltonians.
HermitianOperator sampled_hamiltonian(const NoisyMatrixOracle& oracle, long M_disc, int trials, Rng& rng);

struct TaylorConfig {
  int K = 0;          // 0: smallest order meeting target_error
  int r = 0;          // 0: ceil(t max_norm d_eff / ln 2)
  long M_disc = 0;    // 0: ceil(10 max_norm / max(eta, max_norm delta)), 1024 if both vanish
  double eta = 0.0;
  double delta = 0.0;
  double t = 1.0;
  double target_error = 1e-10;
  double delta_constant = 10.0;  // noisy mode requires delta <= delta_constant / M_disc

  void validate() const;
};

/// i log(U) / t for the unitary polar factor U of Q. Throws if Q is further
/// than 0.1 from unitary or an eigenphase reaches pi - 0.1.
HermitianOperator extract_effective_hamiltonian(const CMatrix& Q, double t);

struct NoisySimulation {
  CMatrix Q;
  HermitianOperator M_tilde;      // ensemble average
  HermitianOperator M_extracted;  // recovered from Q
  int K = 0, r = 0, colors = 0, d = 0;
  long M_disc = 0;
  double truncation_bound = 0.0;  // bound on ||Q - e^{-i M_tilde t}||
  double evolution_error = 0.0;   // measured ||Q - e^{-i M_tilde t}||
  double unitarity_drift = 0.0;   // ||Q^dagger Q - I||
  double success_amplitude = 1.0; // product of segment amplitudes
  double norm_error = 0.0;        // ||M - M_extracted||
  double bound_unit = 0.0;        // d (max_norm delta + eta)
  std::uint64_t charges = 0;      // r K
};

/// r segments of the order-K series for M_tilde t / r, each a sum over the
/// sign-discretized one-sparse unitaries fed by the noisy oracle.
NoisySimulation simulate_noisy(const NoisyMatrixOracle& oracle, TaylorConfig cfg);

/// Random Hermitian real matrix of dimension `dim` with exactly `d` nonzeros per
/// row: the diagonal plus d - 1 disjoint perfect matchings; max norm `scale`.
CMatrix random_sparse_instance(int dim, int d, double scale, Rng& rng);

}  // namespace aqml::lcu
