#include "aqml/kmeans.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "aqml/error.hpp"
#include "aqml/statevec.hpp"

namespace aqml::kmeans {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("private-kmeans", msg); }

constexpr double kPi = 3.14159265358979323846;
constexpr double kPopulationCap = 1e9;

std::uint64_t tie_index(int round, size_t j) {
  return (static_cast<std::uint64_t>(round) << 32) | static_cast<std::uint64_t>(j);
}

PrivacyReport privacy_report(std::uint64_t q, int N) {
  PrivacyReport r;
  r.N = N;
  r.q_total = q;
  const double x = static_cast<double>(q) / N;
  r.p_opt_closed_form = x / 2.0 >= kPi / 2.0 ? 1.0 : 0.5 + 0.5 * std::abs(std::sin(x / 2.0));
  r.p_opt_exact = r.p_opt_closed_form;
  r.bound = x / 2.0;
  r.series_bound = std::expm1(x) / 4.0;
  return r;
}

// Optimal probe for U = exp(-i sum Z / 2N): equal superposition of the basis
// states carrying the extreme eigenvalues of sum Z, found by search.
double exact_optimum(int q, int N) {
  const std::uint64_t dim = std::uint64_t{1} << q;
  std::uint64_t lo = 0, hi = 0;
  int lo_val = q + 1, hi_val = -q - 1;
  for (std::uint64_t b = 0; b < dim; ++b) {
    const int lambda = q - 2 * std::popcount(b);
    if (lambda < lo_val) lo_val = lambda, lo = b;
    if (lambda > hi_val) hi_val = lambda, hi = b;
  }
  linalg::CVector psi = linalg::CVector::Zero(static_cast<Eigen::Index>(dim));
  psi(static_cast<Eigen::Index>(lo)) += std::sqrt(0.5);
  psi(static_cast<Eigen::Index>(hi)) += std::sqrt(0.5);
  psi.normalize();
  const linalg::CMatrix rho = psi * psi.adjoint();
  return distinguishing_probability(rho, q, N);
}

}  // namespace

std::vector<Participant> ingest(const std::vector<RVector>& rows, const std::vector<bool>& participation) {
  if (!participation.empty() && participation.size() != rows.size()) fail("one participation flag per row required");
  std::vector<Participant> out;
  out.reserve(rows.size());
  for (size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows.front().size()) fail("participant vectors must share one dimension");
    if (!rows[j].allFinite()) fail("participant vector has non-finite entries");
    Participant p;
    p.x = rows[j].cwiseMax(-1.0).cwiseMin(1.0);
    p.participates = participation.empty() ? true : participation[j];
    out.push_back(std::move(p));
  }
  return out;
}

int PhaseSchedule::levels(double tau) const {
  if (!(tau > 0.0)) fail("precision must be positive");
  int K = 0;
  while (K < 40 && std::ldexp(1.0, K + 2) - 1.0 <= c / tau) ++K;
  return K + 1;
}

std::uint64_t PhaseSchedule::repetitions(double tau) const {
  const int L = levels(tau);
  std::uint64_t total = 0;
  for (int k = 0; k < L; ++k)
    total += 2 * static_cast<std::uint64_t>(shots + slope * (L - 1 - k)) * (std::uint64_t{1} << k);
  return total;
}

double PhaseSchedule::effective_constant() const { return 2.0 * (shots + slope) * (c + 1.0); }

void PhaseSchedule::validate() const {
  if (!(c >= 1.0)) fail("schedule constant c must be >= 1");
  if (shots < 1 || slope < 0) fail("schedule needs shots >= 1 and slope >= 0");
}

void ProtocolConfig::validate() const {
  if (k < 1) fail("k must be >= 1");
  if (d < 0) fail("d must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  if (max_rounds < 0) fail("max_rounds must be >= 0");
  if (!(converge_tol >= 0.0)) fail("converge_tol must be >= 0");
  if (!(privacy_delta >= 0.0)) fail("privacy_delta must be >= 0");
  schedule.validate();
}

double ghz_phase_channel(const std::vector<double>& thetas, double t) {
  double phi = 0.0;
  for (double th : thetas) phi += th;
  if (!(std::abs(phi * t) < kPi)) fail("phase wrap: |sum(theta) t| >= pi");
  const double c = std::cos(phi * t / 2.0);
  return c * c;
}

double ghz_statevector_probability(const std::vector<double>& thetas, double t, bool sine) {
  const int n = static_cast<int>(thetas.size());
  if (n < 1 || n > 12) fail("state-vector GHZ model supports 1..12 qubits");
  qsim::QuantumRegister reg(n);
  reg.apply(qsim::gates::h(), {0});
  for (int j = 1; j < n; ++j) reg.apply(qsim::gates::x(), {j}, {0});
  for (int j = 0; j < n; ++j) reg.apply(qsim::gates::rz(thetas[static_cast<size_t>(j)] * t), {j});
  for (int j = n - 1; j >= 1; --j) reg.apply(qsim::gates::x(), {j}, {0});
  if (sine) reg.apply(qsim::gates::phase(-kPi / 2.0), {0});
  reg.apply(qsim::gates::h(), {0});
  return reg.probability_zero(0);
}

double readout_probability(double phi, double t, bool sine) {
  return 0.5 * (1.0 + std::cos(phi * t - (sine ? kPi / 2.0 : 0.0)));
}

PhaseEstimate estimate_phase(double phi, double tau, const PhaseSchedule& schedule, Rng& rng, bool noise) {
  schedule.validate();
  PhaseEstimate out;
  out.levels = schedule.levels(tau);
  const int K = out.levels - 1;
  double est = 0.0;
  for (int k = 0; k <= K; ++k) {
    const double t = std::ldexp(1.0, k);
    const int n = schedule.shots + schedule.slope * (K - k);
    double freq[2];
    for (int quad = 0; quad < 2; ++quad) {
      int zeros = 0;
      if (noise) {
        for (int s = 0; s < n; ++s) {
          const double spam = uniform(rng, -kPi, kPi);
          zeros += uniform01(rng) < readout_probability(phi + spam / t, t, quad == 1);
        }
      } else {
        zeros = std::binomial_distribution<int>(n, readout_probability(phi, t, quad == 1))(rng);
      }
      freq[quad] = static_cast<double>(zeros) / n;
    }
    const double angle = std::atan2(2.0 * freq[1] - 1.0, 2.0 * freq[0] - 1.0);
    if (k == 0) {
      est = angle;
    } else {
      // Candidate (angle + 2 pi m) / t nearest the previous estimate.
      const double m = std::round((est * t - angle) / (2.0 * kPi));
      est = (angle + 2.0 * kPi * m) / t;
    }
    out.repetitions += 2 * static_cast<std::uint64_t>(n) * (std::uint64_t{1} << k);
  }
  out.value = est;
  return out;
}

int assign(const RVector& x, const std::vector<RVector>& centroids, Rng& tie_rng) {
  if (centroids.empty()) fail("no centroids");
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> ties;
  for (size_t p = 0; p < centroids.size(); ++p) {
    if (centroids[p].size() != x.size()) fail("centroid dimension mismatch");
    const double dd = (x - centroids[p]).squaredNorm();
    if (dd < best) {
      best = dd;
      ties.assign(1, static_cast<int>(p));
    } else if (dd == best) {
      ties.push_back(static_cast<int>(p));
    }
  }
  if (ties.size() == 1) return ties.front();
  return ties[std::uniform_int_distribution<size_t>(0, ties.size() - 1)(tie_rng)];
}

ClassicalIteration classical_iteration(const std::vector<Participant>& ps, const std::vector<RVector>& centroids,
                                       std::uint64_t seed, int round) {
  if (ps.empty()) fail("no participants");
  const int k = static_cast<int>(centroids.size());
  const int d = static_cast<int>(ps.front().x.size());
  ClassicalIteration out;
  out.assignment.assign(ps.size(), -1);
  std::vector<RVector> sums(static_cast<size_t>(k), RVector::Zero(d));
  std::vector<int> counts(static_cast<size_t>(k), 0);
  for (size_t j = 0; j < ps.size(); ++j) {
    if (!ps[j].participates) continue;
    Rng tie = make_rng(seed, "kmeans-tie", tie_index(round, j));
    const int p = assign(ps[j].x, centroids, tie);
    out.assignment[j] = p;
    sums[static_cast<size_t>(p)] += ps[j].x;
    ++counts[static_cast<size_t>(p)];
  }
  for (int p = 0; p < k; ++p) {
    const auto c = static_cast<size_t>(p);
    out.probability.push_back(static_cast<double>(counts[c]) / static_cast<double>(ps.size()));
    out.centroids.push_back(counts[c] ? RVector(sums[c] / counts[c]) : centroids[c]);
  }
  return out;
}

void RotationBudget::add_round(std::uint64_t a, std::uint64_t b) {
  q1 += a;
  q2 += b;
  q1_rounds.push_back(a);
  q2_rounds.push_back(b);
}

RotationBudget rotation_budget(int R, int d, double epsilon, double min_p, double c1, double c2) {
  if (R < 0 || d < 0) fail("R and d must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  if (!(min_p > epsilon)) fail("min_p must exceed epsilon");
  if (!(c1 >= 0.0 && c2 >= 0.0)) fail("budget constants must be >= 0");
  RotationBudget b;
  const auto a1 = static_cast<std::uint64_t>(std::ceil(c1 / epsilon - 1e-9));
  const auto a2 = static_cast<std::uint64_t>(std::ceil(c2 * d / (min_p * epsilon) - 1e-9));
  for (int r = 0; r < R; ++r) b.add_round(a1, a2);
  return b;
}

RotationBudget rotation_budget(const ProtocolConfig& cfg, int R, double min_p) {
  cfg.validate();
  if (!(min_p > cfg.epsilon)) fail("min_p must exceed epsilon");
  const double tau = cfg.epsilon * (min_p - cfg.epsilon / 2.0) / 4.0;
  const std::uint64_t coarse = cfg.schedule.repetitions(cfg.epsilon / 2.0);
  const std::uint64_t fine = cfg.schedule.repetitions(tau);
  RotationBudget b;
  for (int r = 0; r < R; ++r) b.add_round(coarse + fine, static_cast<std::uint64_t>(cfg.d) * fine);
  return b;
}

RoundResult run_round(const std::vector<Participant>& ps, const std::vector<RVector>& centroids,
                      const ProtocolConfig& cfg, int round, Rng& rng, std::uint64_t max_rotations,
                      ChannelAttack attack) {
  cfg.validate();
  if (static_cast<int>(centroids.size()) != cfg.k) fail("need exactly k centroids");
  for (const auto& c : centroids)
    if (c.size() != cfg.d) fail("centroid dimension mismatch");
  for (const auto& p : ps)
    if (p.x.size() != cfg.d) fail("participant dimension mismatch");

  RoundResult r;
  r.centroids = centroids;
  r.reseeded.assign(static_cast<size_t>(cfg.k), false);
  r.exact = classical_iteration(ps, centroids, cfg.seed, round);
  const double N = static_cast<double>(ps.size());
  const double eps = cfg.epsilon;

  const std::uint64_t coarse = cfg.schedule.repetitions(eps / 2.0);
  if (coarse > max_rotations) {
    r.aborted = true;
    r.abort_reason = "privacy budget";
    return r;
  }
  // Phase 1: membership fractions, all k qubits in parallel.
  for (int p = 0; p < cfg.k; ++p) {
    const double phi = r.exact.probability[static_cast<size_t>(p)];
    r.p_hat.push_back(estimate_phase(phi, eps / 2.0, cfg.schedule, rng, attack.random_phase).value);
  }
  r.q1 = coarse;

  std::vector<double> tau(static_cast<size_t>(cfg.k), 0.0);
  std::uint64_t planned = coarse;
  bool any = false;
  for (int p = 0; p < cfg.k; ++p) {
    const auto c = static_cast<size_t>(p);
    if (!(r.p_hat[c] > eps)) continue;
    any = true;
    tau[c] = eps * (r.p_hat[c] - eps / 2.0) / 4.0;
    planned = std::max(planned, coarse + (static_cast<std::uint64_t>(cfg.d) + 1) * cfg.schedule.repetitions(tau[c]));
  }
  if (!any) {
    r.aborted = true;
    r.abort_reason = "no cluster above epsilon";
    return r;
  }
  if (planned > max_rotations) {
    r.aborted = true;
    r.abort_reason = "privacy budget";
    return r;
  }

  std::vector<RVector> sums(static_cast<size_t>(cfg.k), RVector::Zero(cfg.d));
  for (size_t j = 0; j < ps.size(); ++j)
    if (r.exact.assignment[j] >= 0) sums[static_cast<size_t>(r.exact.assignment[j])] += ps[j].x / N;

  std::uint64_t q1 = coarse, q2 = 0;
  for (int p = 0; p < cfg.k; ++p) {
    const auto c = static_cast<size_t>(p);
    if (tau[c] == 0.0) continue;
    const double phi = r.exact.probability[c];
    const auto refined = estimate_phase(phi, tau[c], cfg.schedule, rng, attack.random_phase);
    r.p_hat[c] = refined.value;
    RVector mu(cfg.d);
    for (int q = 0; q < cfg.d; ++q)
      mu(q) = estimate_phase(sums[c](q), tau[c], cfg.schedule, rng, attack.random_phase).value / refined.value;
    r.centroids[c] = mu;
    q1 = std::max(q1, coarse + refined.repetitions);
    q2 = std::max(q2, static_cast<std::uint64_t>(cfg.d) * refined.repetitions);
  }
  r.q1 = q1;
  r.q2 = q2;

  // Empty clusters move to the participant farthest from its own centroid.
  for (int p = 0; p < cfg.k; ++p) {
    const auto c = static_cast<size_t>(p);
    if (tau[c] != 0.0) continue;
    r.reseeded[c] = true;
    double far = -1.0;
    for (size_t j = 0; j < ps.size(); ++j) {
      const int a = r.exact.assignment[j];
      if (a < 0) continue;
      const double dd = (ps[j].x - centroids[static_cast<size_t>(a)]).squaredNorm();
      if (dd > far) {
        far = dd;
        r.centroids[c] = ps[j].x;
      }
    }
  }
  return r;
}

double distinguishing_probability(const linalg::CMatrix& rho, int q, int N) {
  if (q < 0 || q > 12) fail("exact privacy analysis supports 0..12 qubits");
  if (N < 1) fail("N must be >= 1");
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << q);
  if (rho.rows() != dim || rho.cols() != dim) fail("density matrix dimension mismatch");
  // U = (e^{-i Z / 2N})^{(x) q} built gate by gate on each column.
  linalg::CMatrix U(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    auto reg = qsim::QuantumRegister::basis(q, static_cast<std::uint64_t>(b));
    for (int j = 0; j < q; ++j) reg.apply(qsim::gates::rz(1.0 / N), {j});
    U.col(b) = reg.state();
  }
  linalg::CMatrix off = U;
  off.diagonal().setZero();
  linalg::CMatrix diff;
  if (off.cwiseAbs().maxCoeff() == 0.0) {
    const linalg::CVector u = U.diagonal();
    diff = rho - u.asDiagonal() * rho * u.conjugate().asDiagonal();
  } else {
    diff = rho - U * rho * U.adjoint();
  }
  const linalg::CMatrix herm = (diff + diff.adjoint()) / 2.0;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<linalg::CMatrix>(herm, Eigen::EigenvaluesOnly).eigenvalues();
  return 0.5 + 0.25 * ev.cwiseAbs().sum();
}

PrivacyReport privacy_analysis(const RotationBudget& budget, int N, int exact_qubits) {
  if (N < 1) fail("N must be >= 1");
  const std::uint64_t q = budget.total();
  if (q >= static_cast<std::uint64_t>(N)) {
    std::ostringstream os;
    os << "rotation budget q1 + q2 = " << q << " must be below N = " << N;
    fail(os.str());
  }
  PrivacyReport r = privacy_report(q, N);
  if (q == 0) {
    r.exact_computed = true;
    r.p_opt_exact = 0.5;
  } else if (q <= static_cast<std::uint64_t>(std::min(exact_qubits, 12))) {
    r.exact_computed = true;
    r.p_opt_exact = exact_optimum(static_cast<int>(q), N);
  }
  return r;
}

std::uint64_t rotation_cap(double delta, int N) {
  if (!(delta >= 0.0)) fail("delta must be >= 0");
  if (N < 1) fail("N must be >= 1");
  if (delta >= 0.5) return UINT64_MAX;
  return static_cast<std::uint64_t>(std::floor(2.0 * N * std::asin(2.0 * delta)));
}

double required_population(int R, int d, int k, double epsilon, double delta, double c) {
  if (R < 1 || d < 1 || k < 1) fail("R, d and k must be positive");
  if (!(epsilon > 0.0) || !(delta > 0.0) || !(c > 0.0)) fail("epsilon, delta and c must be positive");
  const double n = c * R * d * k / (epsilon * delta);
  if (!(n <= kPopulationCap)) {
    std::ostringstream os;
    os << "required population " << n << " exceeds the planning cap of 1e9";
    fail(os.str());
  }
  return n;
}

ProtocolResult run_protocol(const std::vector<Participant>& ps, const ProtocolConfig& cfg,
                            const std::vector<RVector>& init, Rng& rng, ChannelAttack attack) {
  cfg.validate();
  if (ps.empty()) fail("no participants");
  const int N = static_cast<int>(ps.size());
  const double tol = cfg.converge_tol > 0.0 ? cfg.converge_tol : cfg.epsilon;
  const std::uint64_t cap = rotation_cap(cfg.privacy_delta, N);

  ProtocolResult out;
  out.trajectory.push_back(init);
  std::vector<RVector> cur = init;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    const std::uint64_t used = out.budget.total();
    const std::uint64_t remaining = cap == UINT64_MAX ? UINT64_MAX : (cap > used ? cap - used : 0);
    auto rr = run_round(ps, cur, cfg, round, rng, remaining, attack);
    if (rr.aborted) {
      if (rr.q1 > 0) out.budget.add_round(rr.q1, 0);
      out.budget_exhausted = std::string(rr.abort_reason) == "privacy budget";
      out.rounds.push_back(std::move(rr));
      break;
    }
    out.budget.add_round(rr.q1, rr.q2);
    double move = 0.0;
    for (int p = 0; p < cfg.k; ++p)
      move = std::max(move, (rr.centroids[static_cast<size_t>(p)] - cur[static_cast<size_t>(p)]).cwiseAbs().maxCoeff());
    cur = rr.centroids;
    out.trajectory.push_back(cur);
    out.rounds.push_back(std::move(rr));
    if (move < tol) {
      out.converged = true;
      break;
    }
  }
  out.privacy = privacy_report(out.budget.total(), N);
  return out;
}

std::vector<RVector> lloyd(const std::vector<Participant>& ps, std::vector<RVector> init, std::uint64_t seed,
                           int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    auto next = classical_iteration(ps, init, seed, it).centroids;
    const double move = max_abs_diff(next, init);
    init = std::move(next);
    if (move == 0.0) break;
  }
  return init;
}

GroupResult group_median_aggregate(const std::vector<Participant>& ps, const ProtocolConfig& cfg,
                                   const std::vector<RVector>& init, int g, Rng& rng,
                                   const std::vector<int>& corrupted) {
  cfg.validate();
  if (g < 3 || g % 2 == 0) fail("group count must be odd and >= 3");
  const auto min_size = static_cast<size_t>(std::ceil(cfg.k / cfg.epsilon));
  if (ps.size() / static_cast<size_t>(g) < min_size) fail("groups fall below the minimum viable population k / epsilon");
  for (int c : corrupted)
    if (c < 0 || c >= g) fail("corrupted group index out of range");

  GroupResult out;
  for (int grp = 0; grp < g; ++grp) {
    std::vector<Participant> part;
    for (size_t j = static_cast<size_t>(grp); j < ps.size(); j += static_cast<size_t>(g)) part.push_back(ps[j]);
    ChannelAttack atk;
    atk.random_phase = std::find(corrupted.begin(), corrupted.end(), grp) != corrupted.end();
    Rng grng(rng());
    out.per_group.push_back(run_protocol(part, cfg, init, grng, atk).trajectory.back());
  }
  for (int p = 0; p < cfg.k; ++p) {
    RVector m(cfg.d);
    for (int q = 0; q < cfg.d; ++q) {
      std::vector<double> v;
      for (const auto& gc : out.per_group) v.push_back(gc[static_cast<size_t>(p)](q));
      std::nth_element(v.begin(), v.begin() + g / 2, v.end());
      m(q) = v[static_cast<size_t>(g / 2)];
    }
    out.centroids.push_back(m);
  }
  return out;
}

std::vector<Participant> blobs(const std::vector<RVector>& centers, int count, double spread, Rng& rng) {
  if (centers.empty() || count < 1) fail("need centers and count >= 1");
  std::vector<RVector> rows;
  for (int i = 0; i < count; ++i) {
    const RVector& c = centers[static_cast<size_t>(i) % centers.size()];
    RVector v(c.size());
    for (int q = 0; q < c.size(); ++q) v(q) = c(q) + normal(rng, 0.0, spread);
    rows.push_back(v);
  }
  return ingest(rows);
}

double max_abs_diff(const std::vector<RVector>& a, const std::vector<RVector>& b) {
  if (a.size() != b.size()) fail("centroid list size mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace aqml::kmeans
