#pragma once

#include <cstdint>
#include <vector>

#include "aqml/linalg.hpp"
#include "aqml/rng.hpp"

namespace aqml::kmeans {

using linalg::RVector;

struct Participant {
  RVector x;  // clamped to [-1, 1] on ingestion
  bool participates = true;
};

/// Clamps every coordinate into [-1, 1]; throws on non-finite values or
/// inconsistent dimensions.
std::vector<Participant> ingest(const std::vector<RVector>& rows, const std::vector<bool>& participation = {});

/// Power-of-two readout ladder. One pass uses t = 1, 2, ..., 2^K with
/// 2^{K+1} - 1 <= c / tau; level k is sampled shots + slope (K - k) times in
/// each of the cosine and sine quadratures.
struct PhaseSchedule {
  double c = 8.0;
  int shots = 12;
  int slope = 2;

  int levels(double tau) const;  // K + 1
  /// Total repetitions sum_q t_q spent by one estimate at precision tau.
  std::uint64_t repetitions(double tau) const;
  /// c_eff with repetitions(tau) <= c_eff / tau for every tau in (0, 1).
  double effective_constant() const;
  void validate() const;
};

struct ProtocolConfig {
  int k = 2;
  int d = 2;
  double epsilon = 0.05;
  int max_rounds = 20;
  double converge_tol = 0.0;  // 0: epsilon
  double privacy_delta = 0.5; // P_opt - 1/2 cap; >= 1/2 disables the cap
  PhaseSchedule schedule;
  std::uint64_t seed = 0;     // tie breaking stream root

  void validate() const;
};

/// cos^2(sum(theta) t / 2): GHZ relative phase after t repetitions, CNOT
/// collapse and a Hadamard. Throws when |sum(theta) t| >= pi.
double ghz_phase_channel(const std::vector<double>& thetas, double t);
/// Same readout through an explicit N-qubit state vector (N <= 12). With
/// `sine` an S^dagger precedes the Hadamard, giving (1 + sin(phi)) / 2.
double ghz_statevector_probability(const std::vector<double>& thetas, double t, bool sine = false);
/// Scalar-phase model of either quadrature; no wrap restriction.
double readout_probability(double phi, double t, bool sine);

struct PhaseEstimate {
  double value = 0.0;
  std::uint64_t repetitions = 0;
  int levels = 0;
};

/// Robust ladder estimate of phi in (-pi, pi] at precision tau. `noise`, if
/// set, adds a uniform random phase to every shot (a spamming eavesdropper).
PhaseEstimate estimate_phase(double phi, double tau, const PhaseSchedule& schedule, Rng& rng, bool noise = false);

/// Index of the nearest centroid; exact ties resolved by `tie_rng`.
int assign(const RVector& x, const std::vector<RVector>& centroids, Rng& tie_rng);

struct ClassicalIteration {
  std::vector<RVector> centroids;  // unchanged for empty clusters
  std::vector<double> probability; // cluster count / N
  std::vector<int> assignment;     // -1 for non-participants
};

/// Exact assignment-then-average step with the protocol's tie rule.
ClassicalIteration classical_iteration(const std::vector<Participant>& ps, const std::vector<RVector>& centroids,
                                       std::uint64_t seed, int round);

struct RotationBudget {
  std::uint64_t q1 = 0, q2 = 0;  // per participant, worst case over clusters
  std::vector<std::uint64_t> q1_rounds, q2_rounds;

  std::uint64_t total() const { return q1 + q2; }
  void add_round(std::uint64_t a, std::uint64_t b);
};

/// Formula budget q1 = ceil(c1 R / eps), q2 = ceil(c2 R d / (min_p eps)).
RotationBudget rotation_budget(int R, int d, double epsilon, double min_p, double c1, double c2);
/// Same with c1 = c2 = the schedule's effective constant scaled by the
/// protocol's precision split.
RotationBudget rotation_budget(const ProtocolConfig& cfg, int R, double min_p);

struct RoundResult {
  std::vector<RVector> centroids;
  std::vector<double> p_hat;
  std::vector<bool> reseeded;
  ClassicalIteration exact;
  std::uint64_t q1 = 0, q2 = 0;
  bool aborted = false;
  const char* abort_reason = "";
};

/// Channel tampering for robustness experiments.
struct ChannelAttack {
  bool random_phase = false;
};

/// One protocol round (steps 1-5). Phase 1 estimates every P(f = p) to
/// epsilon / 2, then refines each cluster to epsilon P_lo / 4 with
/// P_lo = P_hat - epsilon / 2; phase 2 estimates each component sum to the
/// same refined precision. Clusters with P_hat <= epsilon are reseeded at the
/// participant farthest from its centroid. Aborts if no cluster clears
/// epsilon or the round would exceed `max_rotations` per participant.
RoundResult run_round(const std::vector<Participant>& ps, const std::vector<RVector>& centroids,
                      const ProtocolConfig& cfg, int round, Rng& rng, std::uint64_t max_rotations = UINT64_MAX,
                      ChannelAttack attack = {});

struct PrivacyReport {
  int N = 0;
  std::uint64_t q_total = 0;
  double p_opt_closed_form = 0.5;  // 1/2 + |sin(q / 2N)| / 2
  double p_opt_exact = 0.5;        // density-matrix optimum (when computed)
  bool exact_computed = false;
  double bound = 0.0;              // q / (2N)
  double series_bound = 0.0;       // (e^{q/N} - 1) / 4
};

/// Throws when q1 + q2 >= N. The density-matrix optimum is evaluated when
/// the budget spans at most `exact_qubits` qubits.
PrivacyReport privacy_analysis(const RotationBudget& budget, int N, int exact_qubits = 10);
/// 1/2 + (1/4) Tr|rho - U rho U^dagger| for U = exp(-i sum Z / 2N) on q qubits.
double distinguishing_probability(const linalg::CMatrix& rho, int q, int N);
/// Largest per-participant rotation count keeping P_opt - 1/2 <= delta.
std::uint64_t rotation_cap(double delta, int N);

/// c R d k / (epsilon delta); throws above 1e9.
double required_population(int R, int d, int k, double epsilon, double delta, double c = 1.0);

struct ProtocolResult {
  std::vector<std::vector<RVector>> trajectory;  // centroids after each round, [0] = init
  std::vector<RoundResult> rounds;
  RotationBudget budget;
  PrivacyReport privacy;
  bool converged = false;
  bool budget_exhausted = false;
};

ProtocolResult run_protocol(const std::vector<Participant>& ps, const ProtocolConfig& cfg,
                            const std::vector<RVector>& init, Rng& rng, ChannelAttack attack = {});

/// Classical Lloyd iterations to a fixed point (or max_iter).
std::vector<RVector> lloyd(const std::vector<Participant>& ps, std::vector<RVector> init, std::uint64_t seed,
                           int max_iter = 100);

struct GroupResult {
  std::vector<RVector> centroids;               // componentwise median
  std::vector<std::vector<RVector>> per_group;  // final centroids of each group
};

/// Round-robin split into g groups (g odd, >= 3); `corrupted` lists groups
/// whose channel carries random phases.
GroupResult group_median_aggregate(const std::vector<Participant>& ps, const ProtocolConfig& cfg,
                                   const std::vector<RVector>& init, int g, Rng& rng,
                                   const std::vector<int>& corrupted = {});

/// Gaussian blobs clamped to [-1, 1]^d: `count` points split evenly over
/// `centers`, standard deviation `spread`.
std::vector<Participant> blobs(const std::vector<RVector>& centers, int count, double spread, Rng& rng);

double max_abs_diff(const std::vector<RVector>& a, const std::vector<RVector>& b);

}  // namespace aqml::kmeans
