#pragma once

#include <cstdint>
#include <vector>

#include "aqml/lcu.hpp"
#include "aqml/linalg.hpp"
#include "aqml/median.hpp"
#include "aqml/rng.hpp"
#include "aqml/robust.hpp"

namespace aqml::qpca {

using linalg::CMatrix;
using linalg::CVector;
using linalg::HermitianOperator;
using linalg::RMatrix;
using linalg::RVector;

enum class MatrixMode { exact_median, quantum_median };

struct BuildOptions {
  MatrixMode mode = MatrixMode::exact_median;
  double gamma = 0.05;  // quantum mode: per-entry precision
  double delta = 0.05;  // quantum mode: per-entry failure probability
  qsim::FailureMode failure_mode = qsim::FailureMode::worst_case;
};

struct BuiltMatrix {
  HermitianOperator M;
  std::uint64_t charges = 0;
  int failed_entries = 0;  // entries whose draw left the success branch
};

/// Exact mode = robust_pca_matrix. Quantum mode draws every entry from the
/// matrix-element oracle (Hadamard-test features) and returns (M + M^T)/2.
BuiltMatrix build_matrix(const robust::RawDataset& data, const BuildOptions& opts, Rng& rng);

enum class SimMode { exact_exp, lcu_noisy };

struct QpcaOptions {
  int bits = 14;
  int shots = 10000;
  SimMode sim = SimMode::exact_exp;
  lcu::TaylorConfig lcu;  // eta, delta in scaled units (entries of s M)
  lcu::FailurePlacement placement = lcu::FailurePlacement::worst_case;
};

struct QpcaReport {
  std::vector<double> eigenvalues;     // exact, ascending, unscaled
  std::vector<double> overlaps;        // |<x|E_n>|^2
  std::vector<double> histogram;       // sampled mass binned to the nearest eigenvalue
  std::vector<double> expected;        // exact QPE distribution binned the same way
  std::vector<double> gaps;            // distance from E_n to its nearest neighbour (unscaled)
  double lambda_measured = 0.0;        // max_n |histogram_n - overlaps_n|
  double scale = 1.0;                  // s = 1/(2 ||M||_max d)
  int bits = 0, shots = 0;
  bool resolved = true;                // every scaled gap >= 2 * 2^-bits * 2 pi
  double sigma_pert = 0.0;             // ||M - M_tilde|| (unscaled), lcu-noisy only
  std::uint64_t qpe_applications = 0;  // 2^bits - 1 controlled evolutions
  std::uint64_t charges = 0;           // qpe_applications * r K in lcu-noisy mode
};

/// Phase-estimates exp(-i s M) (or its lcu-noisy approximation) on x and
/// bins each sample to the nearest exact eigenvalue.
QpcaReport qpca_sample(const HermitianOperator& M, const CVector& x, const QpcaOptions& opts, Rng& rng);

struct PoisoningReport {
  double alpha = 0.0, L = 0.0;
  int d = 0;
  double norm = 0.0;       // ||M - M'||_2, robust matrices
  double bound = 0.0;      // 5 alpha L (d + 2)
  double mean_norm = 0.0;  // ||C - C'||_2, mean-based matrices
  bool within() const { return norm <= bound; }
  bool mean_violates() const { return mean_norm > bound; }
};

/// Clean vs poisoned robust (and mean-based) matrices. Requires alpha < 1/2
/// and alpha L <= 1.
PoisoningReport poisoning_experiment(const robust::RawDataset& data, const robust::ContaminationSpec& spec, double L);

/// Eigenvector groups of M; columns of `plus`, `minus`, `unknown` are
/// orthonormal eigenvectors. lambda is the smallest distance between a
/// plus-band eigenvalue and any eigenvalue outside the plus band.
struct SubspaceSplit {
  std::vector<int> plus, minus, unknown;  // indices into the ascending spectrum
  double lambda = 0.0;
  CMatrix plus_vectors, minus_vectors, unknown_vectors;

  CMatrix projector_plus() const { return plus_vectors * plus_vectors.adjoint(); }
  /// Throws if the groups do not partition the spectrum or lambda <= 0.
  void validate(int dim) const;
};

SubspaceSplit make_split(const linalg::EigenDecomposition& eig, std::vector<int> plus, std::vector<int> minus);

struct PerturbationReport {
  double sigma = 0.0, lambda = 0.0;
  double bound = 0.0;              // 4 sigma / lambda
  double max_projector_shift = 0.0;
  double weyl_shift = 0.0;         // max_n |E_n - E'_n|
  bool weyl_ok = true;
  int probes = 0, skipped = 0;
  bool within() const { return max_projector_shift <= bound && weyl_ok; }
};

/// |<phi|(P'_+ - P_+)|phi>| over the probe vectors, with P'_+ spanned by the
/// same spectral indices of M'. Probes are skipped when the plus band is
/// degenerate in M'.
PerturbationReport projector_perturbation_check(const HermitianOperator& M, const HermitianOperator& Mp,
                                                const SubspaceSplit& split, const std::vector<CVector>& probes);

/// max_n |E_n(M + sigma Delta) - E_n - sigma <E_n|Delta|E_n>| for each sigma.
std::vector<double> first_order_remainders(const HermitianOperator& M, const HermitianOperator& Delta,
                                           const std::vector<double>& sigmas);

struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double critical = 0.0;  // upper quantile at the two-sided `sigmas` level
  bool pass() const { return statistic <= critical; }
};

/// Pearson test of sampled frequencies against `probs` at `shots` draws.
/// Bins with expected count below `min_expected` are pooled.
ChiSquare multinomial_test(const std::vector<double>& freq, const std::vector<double>& probs, int shots,
                           double sigmas = 3.0, double min_expected = 5.0);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Real symmetric matrix, two nonzeros per row (2x2 rotation blocks in a
/// random basis order), eigenvalues in [-0.95, 0.95] pairwise >= min_gap apart.
RMatrix gapped_instance(int dim, double min_gap, Rng& rng);

/// Random real symmetric matrix with prescribed ascending spectrum `values`.
RMatrix dense_with_spectrum(const std::vector<double>& values, Rng& rng);

CVector random_unit_vector(int dim, Rng& rng);

}  // namespace aqml::qpca
