#include "aqml/median.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aqml/error.hpp"

namespace aqml::median {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("median-oracle", msg); }

// Largest normalized precision handed to a search; any point of a search
// interval of width 1 started around the median is within this of it
// after one step anyway.
constexpr double kMaxUnitEpsilon = 0.2;

double unit_epsilon(double value_epsilon, const Domain& d) {
  return std::min(value_epsilon / d.width(), kMaxUnitEpsilon);
}

}  // namespace

NoisyScalarOracle::Draw NoisyScalarOracle::sample(Rng& rng) {
  ++queries;
  const bool failed = delta > 0.0 && uniform01(rng) < delta;
  if (!failed) {
    const double v = eta > 0.0 ? true_value + uniform(rng, -eta, eta) : true_value;
    return {v, true};
  }
  double v;
  if (failure_mode == FailureMode::worst_case)
    v = (true_value - lo >= hi - true_value) ? lo : hi;
  else
    v = uniform(rng, lo, hi);
  return {v, std::abs(v - true_value) <= eta};
}

void MedianSearchConfig::validate() const {
  std::ostringstream os;
  if (!(epsilon > 0.0 && epsilon < 0.25)) {
    os << "epsilon = " << epsilon << " violates 0 < epsilon < 1/4 (epsilon < 1/4 required)";
    fail(os.str());
  }
  if (!(epsilon_prime >= 0.0 && epsilon_prime < epsilon / 4.0)) {
    os << "epsilon' = " << epsilon_prime << " violates 0 <= epsilon' < epsilon/4 = " << epsilon / 4.0;
    fail(os.str());
  }
  if (!(L > 0.0)) fail("Lipschitz constant L must be positive");
  if (std::abs(epsilon0 - epsilon_prime / L) > 1e-12 * std::max(1.0, epsilon0)) {
    os << "epsilon0 = " << epsilon0 << " must equal epsilon'/L = " << epsilon_prime / L;
    fail(os.str());
  }
  if (!(delta0 >= 0.0 && delta0 < 1.0)) fail("delta0 must lie in [0, 1)");
  const int need = iteration_budget(epsilon, epsilon_prime);
  if (p_max < need) {
    os << "p_max = " << p_max << " below the iteration budget " << need;
    fail(os.str());
  }
  if (!(cost_constant > 0.0)) fail("cost constant must be positive");
}

MedianSearchConfig MedianSearchConfig::make(double epsilon, double epsilon_prime, double L, double delta0) {
  MedianSearchConfig c;
  c.epsilon = epsilon;
  c.epsilon_prime = epsilon_prime;
  c.L = L;
  c.epsilon0 = L > 0.0 ? epsilon_prime / L : 0.0;
  c.delta0 = delta0;
  if (epsilon > 0.0 && epsilon < 0.25 && epsilon_prime >= 0.0 && epsilon_prime < epsilon / 4.0)
    c.p_max = sufficient_iterations(epsilon, epsilon_prime);
  c.validate();
  return c;
}

int iteration_budget(double epsilon, double epsilon_prime) {
  if (!(epsilon > 0.0 && epsilon < 0.25)) fail("iteration budget needs 0 < epsilon < 1/4");
  if (!(epsilon_prime >= 0.0 && epsilon_prime < epsilon / 4.0))
    fail("iteration budget needs 0 <= epsilon' < epsilon/4");
  const double n = std::log2((1.0 - 4.0 * epsilon) / (2.0 * (epsilon - 4.0 * epsilon_prime)));
  return std::max(0, static_cast<int>(std::ceil(n - 1e-12)));
}

double error_envelope(int p, double c) {
  const double t = std::ldexp(1.0, -p);
  return 0.5 * t + c * (1.0 - t);
}

int sufficient_iterations(double epsilon, double epsilon_prime) {
  int p = iteration_budget(epsilon, epsilon_prime);
  while (error_envelope(p, 2.0 * epsilon_prime) > epsilon) ++p;
  return p;
}

MedianSearchResult binary_search_median(const CdfOracle& oracle, const MedianSearchConfig& cfg, Rng& rng) {
  cfg.validate();
  const double widen = cfg.step_uncertainty();
  MedianSearchResult out;
  double left = 0.0, right = 1.0;
  for (int p = 1; p <= cfg.p_max; ++p) {
    const double mu = left + (right - left) / 2.0;
    const CdfQuery q = oracle(mu, rng);
    ++out.oracle_calls;
    out.charges += q.charge;
    out.success_branch = out.success_branch && q.success;
    SearchStep s;
    s.mu = mu;
    s.estimate = q.probability;
    s.call_success = q.success;
    if (q.probability > 0.5) {
      right = mu + widen;
      s.moved_left = false;
    } else {
      left = mu - widen;
      s.moved_left = true;
    }
    s.left = left;
    s.right = right;
    s.half_width = (right - left) / 2.0;
    out.trace.push_back(s);
  }
  out.value = left + (right - left) / 2.0;
  return out;
}

CdfOracle analytic_cdf_oracle(std::function<double(double)> cdf, const MedianSearchConfig& cfg, bool noisy) {
  const std::uint64_t charge = qsim::amplitude_estimation_charge(cfg.epsilon0 > 0 ? cfg.epsilon0 : 1.0,
                                                                 cfg.delta0, cfg.cost_constant);
  return [cdf = std::move(cdf), cfg, noisy, charge](double y, Rng& rng) {
    const double p = std::clamp(cdf(y), 0.0, 1.0);
    CdfQuery q;
    q.charge = charge;
    if (!noisy || cfg.epsilon0 <= 0.0) {
      q.probability = p;
      return q;
    }
    const auto a = qsim::amplitude_estimate(p, cfg.epsilon0, cfg.delta0, rng, cfg.failure_mode, cfg.cost_constant);
    q.probability = a.value;
    q.success = a.success;
    return q;
  };
}

ListCdf::ListCdf(std::vector<double> values, Domain domain) : domain_(domain) {
  if (values.empty()) fail("ListCdf needs a nonempty list");
  if (!(domain.hi > domain.lo)) fail("ListCdf domain must have hi > lo");
  unit_.reserve(values.size());
  for (double v : values) unit_.push_back(domain.to_unit(v));
  std::sort(unit_.begin(), unit_.end());
}

namespace {

double interpolated_cdf(const std::vector<double>& sorted, double y) {
  const size_t n = sorted.size();
  const double lo = std::min(0.0, sorted.front()), hi = std::max(1.0, sorted.back());
  if (y <= lo) return 0.0;
  if (y > hi) return 1.0;
  // Knots: (lo, 0), (v_(i), (i - 1/2)/n), (hi, 1).
  const size_t i = static_cast<size_t>(std::lower_bound(sorted.begin(), sorted.end(), y) - sorted.begin());
  const double nn = static_cast<double>(n);
  const double xa = i == 0 ? lo : sorted[i - 1];
  const double fa = i == 0 ? 0.0 : (static_cast<double>(i) - 0.5) / nn;
  const double xb = i == n ? hi : sorted[i];
  const double fb = i == n ? 1.0 : (static_cast<double>(i) + 0.5) / nn;
  if (xb <= xa) return fb;
  return fa + (fb - fa) * (y - xa) / (xb - xa);
}

}  // namespace

double ListCdf::cdf(double y_unit) const { return interpolated_cdf(unit_, y_unit); }

double ListCdf::lipschitz(double jitter) const {
  const size_t n = unit_.size();
  double gap = 0.0;
  if (n >= 2) {
    for (size_t i = 1; i < n; ++i) gap = std::max(gap, unit_[i] - unit_[i - 1]);
    gap += 2.0 * jitter;
    return std::max(1.0, static_cast<double>(n) * gap);
  }
  // A single knot: the tails carry the whole quantile range.
  gap = std::max(unit_[0] - std::min(0.0, unit_[0]), std::max(1.0, unit_[0]) - unit_[0]) + jitter;
  return std::max(1.0, 2.0 * gap);
}

double ListCdf::median() const {
  std::vector<double> v;
  v.reserve(unit_.size());
  for (double u : unit_) v.push_back(domain_.from_unit(u));
  return robust::median(std::move(v));
}

std::uint64_t inner_product_charge(double epsilon_prime, double epsilon0, double c) {
  if (!(epsilon_prime > 0.0) || !(epsilon0 > 0.0)) return 1;
  return static_cast<std::uint64_t>(std::ceil(c * std::log(2.0 / epsilon0) / epsilon_prime));
}

CdfOracle list_cdf_oracle(const ListCdf& list, const MedianSearchConfig& cfg, bool noisy) {
  const std::uint64_t charge =
      qsim::amplitude_estimation_charge(cfg.epsilon0 > 0 ? cfg.epsilon0 : 1.0, cfg.delta0, cfg.cost_constant) *
      inner_product_charge(cfg.epsilon_prime, cfg.epsilon0, cfg.cost_constant);
  return [values = list.sorted_unit(), cfg, noisy, charge](double y, Rng& rng) {
    CdfQuery q;
    q.charge = charge;
    if (!noisy) {
      q.probability = interpolated_cdf(values, y);
      return q;
    }
    std::vector<double> jittered(values);
    if (cfg.epsilon_prime > 0.0)
      for (double& v : jittered) v += uniform(rng, -cfg.epsilon_prime, cfg.epsilon_prime);
    std::sort(jittered.begin(), jittered.end());
    const double p = interpolated_cdf(jittered, y);
    if (cfg.epsilon0 <= 0.0) {
      q.probability = p;
      return q;
    }
    const auto a = qsim::amplitude_estimate(p, cfg.epsilon0, cfg.delta0, rng, cfg.failure_mode, cfg.cost_constant);
    q.probability = a.value;
    q.success = a.success;
    return q;
  };
}

MedianEstimate estimate_list_median(const std::vector<double>& values, Domain domain, double epsilon,
                                    double delta0, Rng& rng, bool noisy, FailureMode mode) {
  if (!(epsilon > 0.0)) fail("median precision must be positive");
  ListCdf list(values, domain);
  const double eps = unit_epsilon(epsilon, domain);
  const double eps_prime = eps / 8.0;
  MedianSearchConfig cfg = MedianSearchConfig::make(eps, eps_prime, list.lipschitz(eps_prime), delta0);
  cfg.failure_mode = mode;
  const auto res = binary_search_median(list_cdf_oracle(list, cfg, noisy), cfg, rng);
  MedianEstimate out;
  out.value = domain.from_unit(res.value);
  out.success_branch = res.success_branch;
  out.charges = res.charges;
  out.config = cfg;
  return out;
}

MatrixElementOracle::MatrixElementOracle(linalg::RMatrix features, double R, int k, int l, double gamma,
                                         double delta, FailureMode mode, bool noisy)
    : features_(std::move(features)), R_(R), k_(k), l_(l), gamma_(gamma), delta_(delta), mode_(mode),
      noisy_(noisy) {
  if (features_.rows() < 1) fail("matrix element oracle needs data");
  if (k < 0 || l < 0 || k >= features_.cols() || l >= features_.cols()) fail("matrix element index out of range");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma must lie in (0, 1)");
  if (!(delta >= 0.0 && delta < 1.0)) fail("delta must lie in [0, 1)");
  if (!(R >= 0.0)) fail("R must be >= 0");
  std::vector<double> a(static_cast<size_t>(features_.rows())), b(a.size()), prod(a.size());
  for (Eigen::Index j = 0; j < features_.rows(); ++j) {
    a[static_cast<size_t>(j)] = features_(j, k);
    b[static_cast<size_t>(j)] = features_(j, l);
  }
  const double mk = robust::median(a), ml = robust::median(b);
  for (size_t j = 0; j < a.size(); ++j) prod[j] = (a[j] - mk) * (b[j] - ml);
  exact_ = robust::median(prod);
}

double MatrixElementOracle::delta0() const {
  // Union bound over every oracle call of the three searches.
  const double rr = std::max(R_, 1e-12);
  const double e1 = unit_epsilon(component_precision(), Domain{-rr, rr});
  const double bound = (2.0 * rr + component_precision()) * (2.0 * rr + component_precision());
  const double e3 = unit_epsilon(product_precision(), Domain{-bound, bound});
  const int calls = 2 * sufficient_iterations(e1, e1 / 8.0) + sufficient_iterations(e3, e3 / 8.0);
  return delta_ / calls;
}

MatrixElementOracle::Draw MatrixElementOracle::draw(Rng& rng) const {
  const double rr = std::max(R_, 1e-12);
  const Domain comp{-rr, rr};
  const double d0 = delta0();
  std::vector<double> a(static_cast<size_t>(features_.rows())), b(a.size()), prod(a.size());
  for (Eigen::Index j = 0; j < features_.rows(); ++j) {
    a[static_cast<size_t>(j)] = features_(j, k_);
    b[static_cast<size_t>(j)] = features_(j, l_);
  }
  Draw out;
  const auto mk = estimate_list_median(a, comp, component_precision(), d0, rng, noisy_, mode_);
  const auto ml = estimate_list_median(b, comp, component_precision(), d0, rng, noisy_, mode_);
  for (size_t j = 0; j < a.size(); ++j) prod[j] = (a[j] - mk.value) * (b[j] - ml.value);
  const double bound = (2.0 * rr + component_precision()) * (2.0 * rr + component_precision());
  const auto mp = estimate_list_median(prod, Domain{-bound, bound}, product_precision(), d0, rng, noisy_, mode_);
  out.value = mp.value;
  out.success_branch = mk.success_branch && ml.success_branch && mp.success_branch;
  out.charges = mk.charges + ml.charges + mp.charges;
  return out;
}

MatrixElementOracle matrix_element_oracle(const robust::RawDataset& data, int k, int l, double gamma, double delta,
                                          FailureMode mode) {
  const auto f = robust::feature_values(data, robust::InnerProductMode::hadamard_test);
  return MatrixElementOracle(f, data.R, k, l, gamma, delta, mode);
}

}  // namespace aqml::median
