#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "aqml/linalg.hpp"
#include "aqml/rng.hpp"

namespace aqml::qsim {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::RMatrix;
using linalg::RVector;

inline constexpr int kMaxQubits = 24;

/// Normalized state vector over n qubits. Qubit 0 is the most significant
/// bit of the basis index, so |10> means qubit 0 is set.
class QuantumRegister {
public:
  explicit QuantumRegister(int n_qubits);
  static QuantumRegister basis(int n_qubits, std::uint64_t index);
  /// Validates power-of-two length and unit norm (1e-12).
  static QuantumRegister from_state(const CVector& state);

  int n_qubits() const { return n_; }
  std::uint64_t dim() const { return std::uint64_t{1} << n_; }
  const CVector& state() const { return psi_; }
  double norm() const { return psi_.norm(); }

  /// Controlled-U on `targets` (targets[0] is the most significant bit of
  /// U's index). Acts only where every control qubit is 1.
  void apply(const CMatrix& u, std::span<const int> targets, std::span<const int> controls = {});
  void apply(const CMatrix& u, std::initializer_list<int> targets,
             std::initializer_list<int> controls = {}) {
    apply(u, std::span<const int>(targets.begin(), targets.size()),
          std::span<const int>(controls.begin(), controls.size()));
  }

  /// Distribution over the joint value of `qubits` (first listed = MSB).
  std::vector<double> marginal(std::span<const int> qubits) const;
  double probability_zero(int qubit) const;

private:
  int n_ = 0;
  CVector psi_;
};

QuantumRegister apply_unitary(QuantumRegister reg, const CMatrix& u, std::span<const int> targets,
                              std::span<const int> controls = {});

namespace gates {
CMatrix x();
CMatrix y();
CMatrix z();
CMatrix h();
CMatrix s();
/// diag(1, e^{i theta})
CMatrix phase(double theta);
/// exp(-i theta Z / 2)
CMatrix rz(double theta);
/// exp(-i theta Y / 2)
CMatrix ry(double theta);
CMatrix swap();
}  // namespace gates

/// In-place inverse quantum Fourier transform on `qubits` (first = MSB),
/// built from Hadamards, controlled phases and swaps.
void inverse_qft(QuantumRegister& reg, std::span<const int> qubits);

// ---------------------------------------------------------------------------
// Hadamard test

/// State-preparation oracle U|j>|0> = |j>|v_j> for real unit vectors. Each
/// block is a Householder reflection, so U is self-adjoint.
struct PrepOracle {
  int index_qubits = 0;
  int data_qubits = 0;
  int count = 0;
  CMatrix unitary;  // acts on index (x) data

  static PrepOracle from_vectors(const std::vector<RVector>& vectors);
  /// Rejects vectors with imaginary components above 1e-12.
  static PrepOracle from_vectors(const std::vector<CVector>& vectors);
};

/// P(ancilla = 0) after H, controlled prep, controlled XOR against |k>, H.
double hadamard_test(const PrepOracle& prep, int j, std::uint64_t k);

// ---------------------------------------------------------------------------
// Amplitude estimation

enum class FailureMode { worst_case, uniform };

struct AmplitudeEstimate {
  double value = 0.0;
  bool success = true;      // value is within epsilon0 of the true probability
  std::uint64_t charge = 0; // queries to the state-preparation circuit
};

/// Query charge of one coherent amplitude estimation: ceil(c / (eps0 delta0)).
/// delta0 = 0 denotes an idealized estimator and is charged ceil(c / eps0).
std::uint64_t amplitude_estimation_charge(double epsilon0, double delta0, double c);

/// Contract-level estimator: within epsilon0 with probability >= 1 - delta0.
AmplitudeEstimate amplitude_estimate(double success_prob, double epsilon0, double delta0, Rng& rng,
                                     FailureMode mode = FailureMode::worst_case,
                                     double cost_constant = 8.0);

/// Circuit-level estimator: phase estimation on the Grover iterate of a
/// one-qubit preparation. Precision bits come from amplitude_estimation_bits.
struct CircuitAmplitudeEstimator {
  int bits = 0;
  /// Exact distribution of the estimate sin^2(pi y / 2^bits) over y.
  std::vector<std::pair<double, double>> distribution(double success_prob) const;
  AmplitudeEstimate sample(double success_prob, double epsilon0, Rng& rng) const;
};

/// Smallest precision register for which the textbook error bound gives the
/// (epsilon0, delta0) contract. Throws if more than 9 bits are needed.
int amplitude_estimation_bits(double epsilon0, double delta0);

// ---------------------------------------------------------------------------
// Phase estimation

struct PhaseEstimateResult {
  std::vector<std::pair<double, int>> samples;  // (phase in [0,1), multiplicity)
  int bits = 0;
  int shots = 0;
  /// Textbook bound on the probability of landing outside the two bins that
  /// bracket an eigenphase.
  double failure_prob = 0.0;
  std::vector<double> distribution;  // exact outcome probabilities over 2^bits
};

/// Exact outcome distribution of textbook phase estimation (controlled U^{2^m}
/// powers then inverse QFT), simulated on the full register. U may be
/// slightly non-unitary; the distribution is then renormalized.
std::vector<double> phase_distribution(const CMatrix& u, const CVector& psi, int bits);

PhaseEstimateResult phase_estimate(const CMatrix& u, const QuantumRegister& psi, int bits,
                                   int shots, Rng& rng);

/// Draws `shots` outcomes from an outcome distribution; returns counts.
std::vector<int> sample_counts(const std::vector<double>& probs, int shots, Rng& rng);

/// Closed-form outcome distribution for an exact eigenphase phi (Fejer kernel).
std::vector<double> fejer_distribution(double phi, int bits);

/// Eigenvalue E of H recovered from an eigenphase of exp(-iH): E = -2 pi phi
/// wrapped into (-pi, pi].
double eigenvalue_from_phase(double phi);

}  // namespace aqml::qsim
