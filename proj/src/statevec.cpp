#include "aqml/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "aqml/error.hpp"

namespace aqml::qsim {

namespace {

constexpr double kPi = std::numbers::pi;

[[noreturn]] void fail(const std::string& msg) { throw Error("statevec-sim", msg); }

int log2_exact(std::uint64_t n) {
  int b = 0;
  while ((std::uint64_t{1} << b) < n) ++b;
  return (std::uint64_t{1} << b) == n ? b : -1;
}

int qubits_for(std::uint64_t n) {
  int b = 0;
  while ((std::uint64_t{1} << b) < n) ++b;
  return b;
}

}  // namespace

QuantumRegister::QuantumRegister(int n_qubits) : n_(n_qubits) {
  if (n_qubits < 1 || n_qubits > kMaxQubits) {
    std::ostringstream os;
    os << "register of " << n_qubits << " qubits outside [1, " << kMaxQubits << "]";
    fail(os.str());
  }
  psi_ = CVector::Zero(static_cast<Eigen::Index>(dim()));
  psi_(0) = 1.0;
}

QuantumRegister QuantumRegister::basis(int n_qubits, std::uint64_t index) {
  QuantumRegister r(n_qubits);
  if (index >= r.dim()) fail("basis index out of range");
  r.psi_(0) = 0.0;
  r.psi_(static_cast<Eigen::Index>(index)) = 1.0;
  return r;
}

QuantumRegister QuantumRegister::from_state(const CVector& state) {
  const int n = log2_exact(static_cast<std::uint64_t>(state.size()));
  if (n < 1) fail("state length must be a power of two >= 2");
  if (std::abs(state.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "state not normalized: norm = " << state.norm();
    fail(os.str());
  }
  QuantumRegister r(n);
  r.psi_ = state;
  return r;
}

void QuantumRegister::apply(const CMatrix& u, std::span<const int> targets,
                            std::span<const int> controls) {
  const int m = static_cast<int>(targets.size());
  if (m < 1) fail("apply: no target qubits");
  const Eigen::Index block = Eigen::Index{1} << m;
  if (u.rows() != block || u.cols() != block) {
    std::ostringstream os;
    os << "apply: unitary is " << u.rows() << "x" << u.cols() << " but " << m
       << " targets need " << block;
    fail(os.str());
  }
  std::uint64_t used = 0;
  auto claim = [&](int q) {
    if (q < 0 || q >= n_) fail("apply: qubit index out of range");
    const std::uint64_t bit = std::uint64_t{1} << (n_ - 1 - q);
    if (used & bit) fail("apply: targets and controls overlap");
    used |= bit;
    return bit;
  };
  std::vector<std::uint64_t> tbits(static_cast<size_t>(m));
  for (int r = 0; r < m; ++r) tbits[static_cast<size_t>(r)] = claim(targets[static_cast<size_t>(r)]);
  std::uint64_t cmask = 0;
  for (int q : controls) cmask |= claim(q);

  // Offsets of each pattern a (targets[0] = MSB of a).
  std::vector<std::uint64_t> offset(static_cast<size_t>(block), 0);
  for (Eigen::Index a = 0; a < block; ++a)
    for (int r = 0; r < m; ++r)
      if ((a >> (m - 1 - r)) & 1) offset[static_cast<size_t>(a)] |= tbits[static_cast<size_t>(r)];
  std::uint64_t tmask = 0;
  for (auto b : tbits) tmask |= b;

  std::vector<Complex> in(static_cast<size_t>(block)), out(static_cast<size_t>(block));
  const std::uint64_t d = dim();
  for (std::uint64_t base = 0; base < d; ++base) {
    if ((base & tmask) != 0 || (base & cmask) != cmask) continue;
    for (Eigen::Index a = 0; a < block; ++a)
      in[static_cast<size_t>(a)] = psi_(static_cast<Eigen::Index>(base | offset[static_cast<size_t>(a)]));
    for (Eigen::Index r = 0; r < block; ++r) {
      Complex acc = 0.0;
      for (Eigen::Index c = 0; c < block; ++c) acc += u(r, c) * in[static_cast<size_t>(c)];
      out[static_cast<size_t>(r)] = acc;
    }
    for (Eigen::Index a = 0; a < block; ++a)
      psi_(static_cast<Eigen::Index>(base | offset[static_cast<size_t>(a)])) = out[static_cast<size_t>(a)];
  }
}

std::vector<double> QuantumRegister::marginal(std::span<const int> qubits) const {
  const int m = static_cast<int>(qubits.size());
  std::vector<double> p(std::size_t{1} << m, 0.0);
  for (std::uint64_t i = 0; i < dim(); ++i) {
    std::uint64_t key = 0;
    for (int r = 0; r < m; ++r) {
      const int q = qubits[static_cast<size_t>(r)];
      if (q < 0 || q >= n_) fail("marginal: qubit index out of range");
      key = (key << 1) | ((i >> (n_ - 1 - q)) & 1);
    }
    p[key] += std::norm(psi_(static_cast<Eigen::Index>(i)));
  }
  return p;
}

double QuantumRegister::probability_zero(int qubit) const {
  const int q[1] = {qubit};
  return marginal(q)[0];
}

QuantumRegister apply_unitary(QuantumRegister reg, const CMatrix& u, std::span<const int> targets,
                              std::span<const int> controls) {
  reg.apply(u, targets, controls);
  return reg;
}

namespace gates {
CMatrix x() {
  CMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
CMatrix y() {
  CMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
CMatrix z() {
  CMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
CMatrix h() {
  CMatrix m(2, 2);
  const double r = 1.0 / std::sqrt(2.0);
  m << r, r, r, -r;
  return m;
}
CMatrix s() { return phase(kPi / 2); }
CMatrix phase(double theta) {
  CMatrix m = CMatrix::Identity(2, 2);
  m(1, 1) = std::polar(1.0, theta);
  return m;
}
CMatrix rz(double theta) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -theta / 2);
  m(1, 1) = std::polar(1.0, theta / 2);
  return m;
}
CMatrix ry(double theta) {
  CMatrix m(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, -s, s, c;
  return m;
}
CMatrix swap() {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
  return m;
}
}  // namespace gates

void inverse_qft(QuantumRegister& reg, std::span<const int> qubits) {
  const int n = static_cast<int>(qubits.size());
  const CMatrix sw = gates::swap();
  const CMatrix hh = gates::h();
  for (int i = 0; i < n / 2; ++i)
    reg.apply(sw, {qubits[static_cast<size_t>(i)], qubits[static_cast<size_t>(n - 1 - i)]});
  for (int i = n - 1; i >= 0; --i) {
    for (int j = n - 1; j > i; --j) {
      const double angle = -2.0 * kPi / std::ldexp(1.0, j - i + 1);
      reg.apply(gates::phase(angle), {qubits[static_cast<size_t>(i)]}, {qubits[static_cast<size_t>(j)]});
    }
    reg.apply(hh, {qubits[static_cast<size_t>(i)]});
  }
}

// ---------------------------------------------------------------------------

PrepOracle PrepOracle::from_vectors(const std::vector<RVector>& vectors) {
  if (vectors.empty()) fail("PrepOracle: no vectors");
  const Eigen::Index len = vectors.front().size();
  if (len < 1) fail("PrepOracle: empty vector");
  for (const auto& v : vectors) {
    if (v.size() != len) fail("PrepOracle: vectors differ in length");
    if (std::abs(v.norm() - 1.0) > 1e-12) fail("PrepOracle: vector is not unit norm");
  }
  PrepOracle p;
  p.count = static_cast<int>(vectors.size());
  p.index_qubits = std::max(1, qubits_for(vectors.size()));
  p.data_qubits = std::max(1, qubits_for(static_cast<std::uint64_t>(len)));
  const Eigen::Index db = Eigen::Index{1} << p.data_qubits;
  const Eigen::Index ib = Eigen::Index{1} << p.index_qubits;
  p.unitary = CMatrix::Identity(ib * db, ib * db);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(vectors.size()); ++j) {
    RVector v = RVector::Zero(db);
    v.head(len) = vectors[static_cast<size_t>(j)];
    RVector u = -v;
    u(0) += 1.0;
    const double uu = u.squaredNorm();
    if (uu < 1e-30) continue;  // v = e0
    RMatrix w = RMatrix::Identity(db, db) - (2.0 / uu) * u * u.transpose();
    p.unitary.block(j * db, j * db, db, db) = w.cast<Complex>();
  }
  return p;
}

PrepOracle PrepOracle::from_vectors(const std::vector<CVector>& vectors) {
  std::vector<RVector> real;
  real.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.imag().cwiseAbs().maxCoeff() > 1e-12)
      fail("PrepOracle: complex-valued vector rejected (real data required)");
    real.push_back(v.real());
  }
  return from_vectors(real);
}

double hadamard_test(const PrepOracle& prep, int j, std::uint64_t k) {
  if (j < 0 || j >= prep.count) fail("hadamard_test: index out of range");
  const int iq = prep.index_qubits, dq = prep.data_qubits;
  if (k >= (std::uint64_t{1} << dq)) fail("hadamard_test: basis index out of range");
  // [anc][index][data][kreg]
  const int n = 1 + iq + 2 * dq;
  std::uint64_t init = static_cast<std::uint64_t>(j) << (2 * dq);
  init |= k;
  QuantumRegister reg = QuantumRegister::basis(n, init);

  std::vector<int> prep_targets;
  for (int q = 1; q <= iq + dq; ++q) prep_targets.push_back(q);
  const int anc[1] = {0};
  reg.apply(gates::h(), {0});
  reg.apply(prep.unitary, prep_targets, anc);
  // On the anc = 0 branch, copy |k> into the data register.
  reg.apply(gates::x(), {0});
  for (int b = 0; b < dq; ++b) {
    const int data_q = 1 + iq + b;
    const int k_q = 1 + iq + dq + b;
    reg.apply(gates::x(), {data_q}, {0, k_q});
  }
  reg.apply(gates::x(), {0});
  reg.apply(gates::h(), {0});
  return reg.probability_zero(0);
}

// ---------------------------------------------------------------------------

std::uint64_t amplitude_estimation_charge(double epsilon0, double delta0, double c) {
  if (!(epsilon0 > 0.0) || !(c > 0.0)) fail("amplitude estimation charge needs epsilon0 > 0, c > 0");
  const double denom = delta0 > 0.0 ? epsilon0 * delta0 : epsilon0;
  return static_cast<std::uint64_t>(std::ceil(c / denom));
}

AmplitudeEstimate amplitude_estimate(double success_prob, double epsilon0, double delta0, Rng& rng,
                                     FailureMode mode, double cost_constant) {
  if (!(success_prob >= 0.0 && success_prob <= 1.0)) fail("success_prob outside [0,1]");
  if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) fail("epsilon0 outside (0,1)");
  if (!(delta0 >= 0.0 && delta0 < 1.0)) fail("delta0 outside [0,1)");
  AmplitudeEstimate out;
  out.charge = amplitude_estimation_charge(epsilon0, delta0, cost_constant);
  const bool failed = delta0 > 0.0 && uniform01(rng) < delta0;
  if (!failed) {
    const double lo = std::max(0.0, success_prob - epsilon0);
    const double hi = std::min(1.0, success_prob + epsilon0);
    out.value = lo + (hi - lo) * uniform01(rng);
  } else if (mode == FailureMode::worst_case) {
    out.value = success_prob < 0.5 ? 1.0 : 0.0;
  } else {
    out.value = uniform01(rng);
  }
  out.success = std::abs(out.value - success_prob) <= epsilon0;
  return out;
}

int amplitude_estimation_bits(double epsilon0, double delta0) {
  if (!(epsilon0 > 0.0) || !(delta0 > 0.0 && delta0 < 1.0))
    fail("circuit amplitude estimation needs epsilon0 > 0 and 0 < delta0 < 1");
  // Error bound 2 pi k sqrt(p(1-p))/M + (k pi / M)^2 holds with probability
  // >= 8/pi^2 for k = 1 and >= 1 - 1/(2(k-1)) for k >= 2.
  const double k = delta0 >= 1.0 - 8.0 / (kPi * kPi) ? 1.0 : std::ceil(1.0 + 1.0 / (2.0 * delta0));
  for (int bits = 1; bits <= 9; ++bits) {
    const double m = std::ldexp(1.0, bits);
    if (kPi * k / m + (k * kPi / m) * (k * kPi / m) <= epsilon0) return bits;
  }
  fail("circuit amplitude estimation would need more than 10 qubits");
}

std::vector<std::pair<double, double>> CircuitAmplitudeEstimator::distribution(double success_prob) const {
  if (bits < 1 || bits > 9) fail("circuit amplitude estimation: bits outside [1, 9]");
  const double theta = std::asin(std::sqrt(std::clamp(success_prob, 0.0, 1.0)));
  const CMatrix a = gates::ry(2.0 * theta);
  // Grover iterate -A S0 A^dagger S_chi with S0 = -Z and S_chi = Z (good state |1>).
  const CMatrix q = a * gates::z() * a.adjoint() * gates::z();
  const CVector psi = a.col(0);
  const auto probs = phase_distribution(q, psi, bits);
  std::vector<std::pair<double, double>> out;
  const double m = std::ldexp(1.0, bits);
  for (size_t y = 0; y < probs.size(); ++y) {
    const double s = std::sin(kPi * static_cast<double>(y) / m);
    out.emplace_back(s * s, probs[y]);
  }
  return out;
}

AmplitudeEstimate CircuitAmplitudeEstimator::sample(double success_prob, double epsilon0, Rng& rng) const {
  const auto dist = distribution(success_prob);
  std::vector<double> w;
  w.reserve(dist.size());
  for (const auto& [v, p] : dist) w.push_back(p);
  std::discrete_distribution<size_t> pick(w.begin(), w.end());
  AmplitudeEstimate out;
  out.value = dist[pick(rng)].first;
  out.success = std::abs(out.value - success_prob) <= epsilon0;
  // One controlled Grover iterate costs two calls to A; 2^bits - 1 iterates.
  out.charge = 2 * ((std::uint64_t{1} << bits) - 1) + 1;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> phase_distribution(const CMatrix& u, const CVector& psi, int bits) {
  if (bits < 1 || bits > 16) fail("phase estimation: bits outside [1, 16]");
  if (u.rows() != u.cols() || u.rows() != psi.size()) fail("phase estimation: dimension mismatch");
  const int dq = std::max(1, qubits_for(static_cast<std::uint64_t>(psi.size())));
  if (bits + dq > kMaxQubits) fail("phase estimation: register exceeds qubit cap");
  const Eigen::Index db = Eigen::Index{1} << dq;

  CMatrix upad = CMatrix::Identity(db, db);
  upad.topLeftCorner(u.rows(), u.cols()) = u;
  CVector init = CVector::Zero(db);
  init.head(psi.size()) = psi / psi.norm();

  QuantumRegister reg(bits + dq);
  CVector full = CVector::Zero(static_cast<Eigen::Index>(reg.dim()));
  full.head(db) = init;
  reg = QuantumRegister::from_state(full);

  std::vector<int> data;
  for (int q = bits; q < bits + dq; ++q) data.push_back(q);
  std::vector<int> ctrl;
  for (int q = 0; q < bits; ++q) ctrl.push_back(q);

  for (int q = 0; q < bits; ++q) reg.apply(gates::h(), {q});
  // Control qubit i applies U^{2^{bits-1-i}}.
  CMatrix power = upad;
  for (int i = bits - 1; i >= 0; --i) {
    const int c[1] = {i};
    reg.apply(power, data, c);
    if (i > 0) power = power * power;
  }
  inverse_qft(reg, ctrl);
  auto probs = reg.marginal(ctrl);
  double total = 0.0;
  for (double p : probs) total += p;
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<int> sample_counts(const std::vector<double>& probs, int shots, Rng& rng) {
  if (shots < 0) fail("negative shot count");
  std::vector<int> counts(probs.size(), 0);
  if (shots == 0) return counts;
  std::discrete_distribution<size_t> pick(probs.begin(), probs.end());
  for (int s = 0; s < shots; ++s) ++counts[pick(rng)];
  return counts;
}

PhaseEstimateResult phase_estimate(const CMatrix& u, const QuantumRegister& psi, int bits, int shots,
                                   Rng& rng) {
  PhaseEstimateResult out;
  out.bits = bits;
  out.shots = shots;
  out.distribution = phase_distribution(u, psi.state(), bits);
  out.failure_prob = 1.0 - 8.0 / (kPi * kPi);
  const auto counts = sample_counts(out.distribution, shots, rng);
  const double m = std::ldexp(1.0, bits);
  for (size_t y = 0; y < counts.size(); ++y)
    if (counts[y] > 0) out.samples.emplace_back(static_cast<double>(y) / m, counts[y]);
  return out;
}

std::vector<double> fejer_distribution(double phi, int bits) {
  const double n = std::ldexp(1.0, bits);
  std::vector<double> out(static_cast<size_t>(n));
  for (size_t y = 0; y < out.size(); ++y) {
    const double delta = phi - static_cast<double>(y) / n;
    const double den = std::sin(kPi * delta);
    if (std::abs(den) < 1e-15) {
      out[y] = 1.0;
    } else {
      const double num = std::sin(kPi * n * delta);
      out[y] = (num * num) / (n * n * den * den);
    }
  }
  return out;
}

double eigenvalue_from_phase(double phi) {
  double e = -2.0 * kPi * phi;
  while (e <= -kPi) e += 2.0 * kPi;
  while (e > kPi) e -= 2.0 * kPi;
  return e;
}

}  // namespace aqml::qsim
