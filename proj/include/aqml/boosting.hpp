#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aqml/linalg.hpp"
#include "aqml/rng.hpp"
#include "aqml/robust.hpp"

namespace aqml::boosting {

using linalg::CMatrix;
using linalg::CVector;
using linalg::HermitianOperator;
using linalg::RVector;

inline const std::string kHyperplaneTag = "hyperplane";
inline const std::string kCustomTag = "custom";

/// Two-class weak classifier. The "hyperplane" family keeps the normal w and
/// the midpoint offset; its operator is the reflection 2 n n^T - I with
/// n = w / |w| zero-padded to the ambient dimension. The "custom" family
/// carries an explicit Hermitian unitary.
struct WeakClassifier {
  std::string tag = kHyperplaneTag;
  RVector w;
  double offset = 0.0;
  CMatrix op;  // custom family only

  /// Classical decision sign(w . x - offset), ties to +1.
  int predict(const RVector& x) const;
  static WeakClassifier hyperplane(RVector w, double offset = 0.0);
  /// Throws unless `op` is Hermitian and unitary within 1e-10.
  static WeakClassifier custom(const CMatrix& op);
};

/// Throws on a zero normal, a normal longer than the ambient dimension, or
/// a custom operator of the wrong size.
HermitianOperator classifier_operator(const WeakClassifier& c, int ambient_dim);

struct EnsembleSpec {
  std::vector<WeakClassifier> classifiers;
  std::vector<double> weights;  // b_j
  double gap_gamma = 0.0;       // 0: not claimed
  int ambient_dim = 0;

  int size() const { return static_cast<int>(classifiers.size()); }
  /// Classifiers with positive weight whose operators differ pairwise.
  int distinct_count() const;
  /// Weights non-negative summing to 1, operators valid. `strict` also
  /// requires two distinct classifiers with positive weight.
  void validate(bool strict = true) const;
  static EnsembleSpec uniform(std::vector<WeakClassifier> cs, int ambient_dim);
};

/// C = sum_j b_j C_j. Validated non-strictly.
HermitianOperator ensemble_operator(const EnsembleSpec& spec);

/// 2 min_n |E_n(C)|, the largest gamma the spectrum of C supports.
double measured_gamma(const HermitianOperator& C);
/// Same restricted to eigenvectors carrying more than `tol` of psi.
double support_gamma(const HermitianOperator& C, const CVector& psi, double tol = 1e-12);

struct TrainedEnsemble {
  EnsembleSpec spec;
  std::vector<double> excluded_fraction;  // distinct rows absent from each resample
  std::vector<double> train_accuracy;     // on the resample
  std::vector<int> redraws;               // single-class resamples rejected
};

/// `count` bootstrap resamples, one mean-difference hyperplane each, uniform
/// weights. Labels are +1 / -1. A resample holding one class is redrawn up
/// to 10 times.
TrainedEnsemble train_bootstrap_ensemble(const robust::RawDataset& data, const std::vector<int>& labels, int count,
                                         Rng& rng);

/// Index-register state preparation: unitary B with B e_0 = sum_j sqrt(b_j) e_j.
CMatrix prepare_weights(const std::vector<double>& b);
/// select(V) = sum_j |j><j| (x) C_j, index register outermost.
CMatrix select_operator(const EnsembleSpec& spec);
/// (<0| B^dagger (x) I) select(V) (B |0> (x) I); equals C.
CMatrix lcu_block(const EnsembleSpec& spec);

enum class SimMode { exact_exp, lcu_taylor };

struct ClassifyOptions {
  int bits = 10;
  int shots = 1000;  // 0: use the exact outcome distribution
  SimMode sim = SimMode::exact_exp;
  bool tie_positive = true;  // exact mass 1/2: +1 (flagged) or -1
  double target_error = 1e-10;
};

struct Classification {
  int cls = 1;
  double mass_plus = 0.0;        // sampled (or exact-distribution) positive-band mass
  double confidence = 0.0;       // |mass_plus - 1/2|
  double exact_mass_plus = 0.0;  // <psi|P_+|psi> from the exact spectrum
  bool tie = false;
  bool unresolved = false;  // psi has mass on |E| <= 2 pi 2^-bits
  double evolution_error = 0.0;       // lcu mode: ||W - e^{-iC}||
  std::uint64_t select_queries = 0;   // per run: (2^bits - 1) r K
  std::uint64_t prepare_queries = 0;  // (2^bits - 1) 2 r
};

/// Phase estimation of e^{-iC} (t = 1) on psi; outcomes with estimated
/// eigenvalue > 0 count toward mass_plus, exactly 0 counts half.
Classification classify_by_eigenspace(const CVector& psi, const EnsembleSpec& spec, const ClassifyOptions& opts,
                                      Rng& rng);

/// Exact <psi|P_+|psi> with P_+ the projector onto E > 0 (E = 0 counts half).
double exact_positive_mass(const HermitianOperator& C, const CVector& psi);

struct MeanClassification {
  int cls = 1;
  double expectation = 0.0;
  bool tie = false;
};

MeanClassification classify_by_mean(const CVector& psi, const EnsembleSpec& spec);

enum class AttackStrategy { flip_worst, replace_target, custom };

struct AttackSpec {
  double alpha = 0.0;
  AttackStrategy strategy = AttackStrategy::flip_worst;
  std::vector<int> indices;  // classifiers to replace; empty: heaviest first
  CVector target;            // replace_target: psi
  int target_class = -1;     // replace_target: C'_j = -/+ (I - 2 psi psi^dagger)
  std::vector<CMatrix> replacements;  // custom: cycled
};

struct AttackReport {
  EnsembleSpec attacked;
  std::vector<int> replaced;
  double replaced_mass = 0.0;
  double norm_shift = 0.0;     // ||C' - C||
  double eig_shift_max = 0.0;  // max_n |E'_n - E_n| (sorted spectra)
  double bound = 0.0;          // 2 alpha
  bool within() const { return norm_shift <= bound + 1e-12 && eig_shift_max <= bound + 1e-12; }
};

/// Replaces classifiers holding at most alpha of the weight and checks both
/// shifts against 2 alpha; a violation throws.
AttackReport attack_ensemble(const EnsembleSpec& spec, const AttackSpec& attack);

/// True when every eigenvalue of C' has the sign of the matching (sorted)
/// eigenvalue of C.
bool spectral_signs_preserved(const HermitianOperator& C, const HermitianOperator& Cp);

/// Upper bound on |<psi|P'_+ - P_+|psi>| when ||C' - C|| <= 2 alpha and the
/// spectrum of C avoids (-gamma/2, gamma/2): sin(asin(4 alpha / gamma) / 2).
/// Returns 1 when 4 alpha >= gamma.
double stability_margin(double alpha, double gamma);

/// The single-classifier attack on the mean classifier. N reflections with
/// <psi|C_j|psi> = 0.4 / N, a gapped spectrum and psi mostly in the
/// positive eigenspace; the attack replaces C_1 by I - 2 psi psi^dagger.
struct MeanAttackInstance {
  EnsembleSpec spec;
  CVector psi;
  AttackSpec attack;
};

MeanAttackInstance mean_attack_instance(int N, int dim, Rng& rng);

/// Random reflection with `positives` +1 eigenvalues.
CMatrix random_reflection(int dim, int positives, Rng& rng);

/// N reflections Q_j R_0 Q_j^T around one random reflection R_0 (random
/// signature), Q_j = exp(spread A_j) for Gaussian antisymmetric A_j.
/// Weights uniform, or Dirichlet(1) draws when `random_weights`.
EnsembleSpec clustered_ensemble(int N, int dim, double spread, bool random_weights, Rng& rng);

}  // namespace aqml::boosting
