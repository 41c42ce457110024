#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "aqml/rng.hpp"
#include "aqml/robust.hpp"
#include "aqml/statevec.hpp"

namespace aqml::median {

using qsim::FailureMode;

/// A value reported within eta of the truth with probability >= 1 - delta.
/// Failed draws are either the worst admissible value or uniform in
/// [lo, hi].
struct NoisyScalarOracle {
  double true_value = 0.0;
  double eta = 0.0;
  double delta = 0.0;
  FailureMode failure_mode = FailureMode::worst_case;
  double lo = -1.0, hi = 1.0;  // range used by failure draws
  std::uint64_t queries = 0;

  struct Draw {
    double value;
    bool success;
  };
  Draw sample(Rng& rng);
};

/// All quantities are in normalized search coordinates, where the search
/// interval starts at [0, 1].
struct MedianSearchConfig {
  double epsilon = 0.05;        // target median error
  double epsilon_prime = 0.01;  // inner-product precision
  double epsilon0 = 0.01;       // amplitude-estimation error, = epsilon_prime / L
  double delta0 = 0.0;          // per-call failure probability
  double L = 1.0;               // Lipschitz constant of the inverse CDF
  int p_max = 0;
  double cost_constant = 8.0;
  FailureMode failure_mode = FailureMode::worst_case;

  /// Throws naming the first violated admissibility condition.
  void validate() const;
  /// Fills epsilon0 = epsilon_prime / L and p_max = sufficient_iterations.
  static MedianSearchConfig make(double epsilon, double epsilon_prime, double L, double delta0);
  /// epsilon' + L epsilon0: per-step endpoint uncertainty.
  double step_uncertainty() const { return epsilon_prime + L * epsilon0; }
};

/// ceil(log2((1 - 4 eps) / (2 (eps - 4 eps')))), clamped at 0.
int iteration_budget(double epsilon, double epsilon_prime);

/// Closed-form error envelope after p steps: 2^{-p-1} + c (1 - 2^{-p}).
double error_envelope(int p, double c);

/// max(iteration_budget, smallest p with error_envelope(p, 2 eps') <= eps).
int sufficient_iterations(double epsilon, double epsilon_prime);

struct CdfQuery {
  double probability = 0.0;
  bool success = true;
  std::uint64_t charge = 0;
};

/// y (normalized) -> estimate of P(value < y).
using CdfOracle = std::function<CdfQuery(double y, Rng& rng)>;

struct SearchStep {
  double left = 0.0, right = 1.0, mu = 0.5;
  double estimate = 0.0;   // estimated probability at mu
  bool moved_left = false; // true when L <- mu
  bool call_success = true;
  double half_width = 0.5; // half-width of the interval after this step
};

struct MedianSearchResult {
  double value = 0.5;        // mu_{p_max + 1}, normalized
  bool success_branch = true;
  std::uint64_t charges = 0;
  int oracle_calls = 0;
  std::vector<SearchStep> trace;
};

MedianSearchResult binary_search_median(const CdfOracle& oracle, const MedianSearchConfig& cfg, Rng& rng);

/// Oracle around a known CDF (normalized coordinates). `noisy` routes each
/// probability through the contract amplitude estimator with (epsilon0, delta0).
CdfOracle analytic_cdf_oracle(std::function<double(double)> cdf, const MedianSearchConfig& cfg, bool noisy);

/// Affine map between value coordinates [lo, hi] and the normalized [0, 1].
struct Domain {
  double lo = -1.0, hi = 1.0;
  double to_unit(double v) const { return (v - lo) / (hi - lo); }
  double from_unit(double u) const { return lo + u * (hi - lo); }
  double width() const { return hi - lo; }
};

/// Finite list of values treated as a distribution. The CDF is the piecewise
/// linear interpolation through (v_(i), (i - 1/2)/n), anchored at the domain
/// ends, so its 1/2-crossing is the midpoint-convention median.
class ListCdf {
public:
  ListCdf(std::vector<double> values, Domain domain);

  const Domain& domain() const { return domain_; }
  double cdf(double y_unit) const;  // P(value < y) on the interpolated law
  /// Lipschitz constant of the inverse interpolated CDF over interior knots,
  /// allowing every element to move by `jitter` (normalized), at least 1.
  double lipschitz(double jitter) const;
  /// Exact median (midpoint convention), value coordinates.
  double median() const;
  const std::vector<double>& sorted_unit() const { return unit_; }

private:
  std::vector<double> unit_;
  Domain domain_;
};

/// CDF oracle over a list: each call perturbs every element by U[-eps', eps']
/// (normalized) when `noisy`, then estimates the probability by contract
/// amplitude estimation. Charge per call = AE charge x inner-product charge.
CdfOracle list_cdf_oracle(const ListCdf& list, const MedianSearchConfig& cfg, bool noisy);

/// Inner-product query charge of one Hadamard-test amplitude estimation:
/// ceil(c ln(2 / eps0) / eps').
std::uint64_t inner_product_charge(double epsilon_prime, double epsilon0, double c);

struct MedianEstimate {
  double value = 0.0;  // value coordinates
  bool success_branch = true;
  std::uint64_t charges = 0;
  MedianSearchConfig config;
};

/// Median of a finite list to precision `epsilon` (value units) with
/// per-call failure probability delta0; epsilon' = epsilon/8 in normalized units.
MedianEstimate estimate_list_median(const std::vector<double>& values, Domain domain, double epsilon,
                                    double delta0, Rng& rng, bool noisy = true,
                                    FailureMode mode = FailureMode::worst_case);

/// gamma-approximate oracle for one entry of the median-based matrix.
class MatrixElementOracle {
public:
  /// `features` rows are vectors, columns are e_k^T x_j (e.g. from
  /// robust::feature_values in Hadamard-test mode); `R` bounds |entries|.
  MatrixElementOracle(linalg::RMatrix features, double R, int k, int l, double gamma, double delta,
                      FailureMode mode = FailureMode::worst_case, bool noisy = true);

  struct Draw {
    double value = 0.0;
    bool success_branch = true;
    std::uint64_t charges = 0;
  };
  Draw draw(Rng& rng) const;

  double exact() const { return exact_; }
  double gamma() const { return gamma_; }
  double delta() const { return delta_; }
  /// Per-call failure probability used inside each of the three searches.
  double delta0() const;
  /// Value-unit precisions of the two component medians and the product median.
  double component_precision() const { return gamma_ / (10.0 * std::max(1.0, R_)); }
  double product_precision() const { return gamma_ / 2.0; }

private:
  linalg::RMatrix features_;
  double R_;
  int k_, l_;
  double gamma_, delta_;
  FailureMode mode_;
  bool noisy_;
  double exact_ = 0.0;
};

MatrixElementOracle matrix_element_oracle(const robust::RawDataset& data, int k, int l, double gamma,
                                          double delta, FailureMode mode = FailureMode::worst_case);

}  // namespace aqml::median
