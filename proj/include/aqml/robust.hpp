#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "aqml/linalg.hpp"
#include "aqml/rng.hpp"

namespace aqml::robust {

using linalg::HermitianOperator;
using linalg::RMatrix;
using linalg::RVector;

struct RawDataset {
  std::vector<RVector> vectors;
  double R = 0.0;

  int count() const { return static_cast<int>(vectors.size()); }
  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
  /// Checks shared dimension, finiteness and ||x_j|| <= R (relative 1e-12).
  void validate() const;
  /// Smallest admissible R.
  double max_norm() const;
};

/// Unit vectors on C^N (x) C^{2 N_v + 1}; flat index = a * (2 N_v + 1) + tag.
struct UnitDataset {
  int dim = 0;    // N
  int count = 0;  // N_v
  double R = 0.0;
  std::vector<RVector> kets;    // |x_j>, tag j + 1
  std::vector<RVector> daggers; // |x_j^dagger>, tag j + 1 + N_v

  int tag_dim() const { return 2 * count + 1; }
};

UnitDataset embed(const RawDataset& raw);

/// Odd count: middle order statistic. Even count: midpoint of the central pair.
double median(std::vector<double> values);
double mean(const std::vector<double>& values);

enum class InnerProductMode { exact, hadamard_test };

/// Definition-1 matrix: M_kl = median_j (x_jk - med_k)(x_jl - med_l), with
/// j running over the N_v vectors and k, l over the N features.
HermitianOperator robust_pca_matrix(const RawDataset& data,
                                    InnerProductMode mode = InnerProductMode::exact);

/// Biased covariance (mean in place of median).
HermitianOperator classical_pca_matrix(const RawDataset& data);

/// e_k^T x_j for every j, k, either directly or from the Hadamard-test
/// probability P through e_k^T x_j = R (2P - 1). Rows index vectors.
RMatrix feature_values(const RawDataset& data, InnerProductMode mode);

enum class ContaminationStrategy { replace_prefix, spike_direction, custom };

struct ContaminationSpec {
  double alpha = 0.0;
  ContaminationStrategy strategy = ContaminationStrategy::replace_prefix;
  /// replace_prefix / custom: cycled replacements. spike_direction: first
  /// entry is the direction u (normalized; e0 when empty).
  std::vector<RVector> adversary_vectors;
  std::uint64_t seed = 0;

  int replaced_count(int n) const;
};

RawDataset poison(const RawDataset& data, const ContaminationSpec& spec);

/// Inverse CDF on [0,1] with a Lipschitz bound.
struct DistributionSpec {
  std::string name;
  std::function<double(double)> Q;
  double L = 1.0;

  /// Throws if the Lipschitz bound fails on a 10^3-point grid.
  void validate() const;
  double sample(Rng& rng) const { return Q(uniform01(rng)); }

  static DistributionSpec uniform_pm1();
  static DistributionSpec sine();
  static DistributionSpec cubic();
};

struct MedianStabilityReport {
  double alpha = 0.0;
  int trials = 0;
  int samples = 0;
  double bound = 0.0;        // alpha L
  double slack = 0.0;        // 3 sigma sampling slack of an empirical quantile
  double max_shift = 0.0;    // largest |median(Q_n) - median(P_n)| over trials
  double max_population_shift = 0.0;  // largest |median(Q_n) - median(P)|
  double mean_shift = 0.0;
  int violations = 0;        // trials with shift > bound + slack
  bool pass() const { return violations == 0; }
};

enum class ContaminationSide { upper, lower };

/// Draws `samples` points from P, then moves an alpha fraction of the mass
/// (the smallest points, for an upper attack) to +infinity-side values and
/// compares the contaminated empirical median with the clean one. The shift
/// from median(P) = Q(1/2) is reported alongside.
MedianStabilityReport median_stability_check(const DistributionSpec& dist, double alpha, int trials,
                                             int samples, std::uint64_t seed,
                                             ContaminationSide side = ContaminationSide::upper);

/// Dataset CSV: first line "dim,<N>,R,<R>", then one comma-separated row per
/// vector. NaN/Inf and ragged rows are rejected.
RawDataset read_dataset_csv(std::istream& in);
void write_dataset_csv(std::ostream& out, const RawDataset& data);

/// N_v vectors of dimension N whose components are iid draws from `dist`.
RawDataset synthetic_dataset(const DistributionSpec& dist, int count, int dim, Rng& rng);

}  // namespace aqml::robust
