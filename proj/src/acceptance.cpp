#include "aqml/acceptance.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "aqml/boosting.hpp"
#include "aqml/error.hpp"
#include "aqml/kmeans.hpp"
#include "aqml/lcu.hpp"
#include "aqml/median.hpp"
#include "aqml/qpca.hpp"
#include "aqml/robust.hpp"
#include "aqml/statevec.hpp"

namespace aqml::acceptance {

using csv::Table;
using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::HermitianOperator;
using linalg::NormKind;
using linalg::RMatrix;
using linalg::RVector;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

RVector random_unit(int dim, Rng& rng) {
  RVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v / v.norm();
}

CVector random_state(int dim, Rng& rng) {
  CVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

CMatrix random_hermitian(int dim, Rng& rng) {
  CMatrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(normal(rng), normal(rng));
  return (a + a.adjoint()) / 2.0;
}

double spectral(const CMatrix& m) { return linalg::norm(m, NormKind::spectral); }

// ---------------------------------------------------------------------------

CriterionResult c01(std::uint64_t seed) {
  CriterionResult r;
  const auto t0 = Clock::now();
  Rng rng = make_rng(seed, "acc-embedding");
  Table t("c01_embedding", {"trial", "dim", "count", "R", "max_error"});
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    robust::RawDataset d;
    const int dim = uniform_int(rng, 1, 16), count = uniform_int(rng, 1, 32);
    for (int j = 0; j < count; ++j) {
      RVector v(dim);
      for (int k = 0; k < dim; ++k) v(k) = normal(rng);
      if (uniform01(rng) < 0.1) v.setZero();
      d.vectors.push_back(v);
    }
    d.R = std::max(d.max_norm(), 1e-3) * uniform(rng, 1.0, 2.0);
    const auto e = robust::embed(d);
    double err = 0.0;
    for (int j = 0; j < count; ++j)
      for (int k = 0; k < count; ++k) {
        const auto sj = static_cast<size_t>(j), sk = static_cast<size_t>(k);
        const double want = d.vectors[sj].dot(d.vectors[sk]) / (d.R * d.R);
        err = std::max(err, std::abs(e.daggers[sj].dot(e.kets[sk]) - want));
      }
    worst = std::max(worst, err);
    t.add(trial, dim, count, d.R, err);
  }
  r.seconds = since(t0);
  r.pass = worst <= 1e-10 && r.seconds < 5.0;
  r.summary = "max |<x_j+|x_k> - <x_j,x_k>/R^2| = " + fmt(worst) + " (<= 1e-10) over 1000 datasets, " +
              fmt(r.seconds, 2) + " s (< 5 s)";
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c02(std::uint64_t seed) {
  CriterionResult r;
  const auto t0 = Clock::now();
  Rng rng = make_rng(seed, "acc-hadamard");
  Table t("c02_hadamard", {"oracle", "vector", "dim", "k", "p0", "expected", "error"});
  double worst = 0.0;
  int vectors = 0;
  for (int o = 0; o < 50; ++o) {
    const int dim = uniform_int(rng, 2, 16);
    std::vector<RVector> vs;
    for (int j = 0; j < 4; ++j) vs.push_back(random_unit(dim, rng));
    const auto prep = qsim::PrepOracle::from_vectors(vs);
    for (int j = 0; j < 4; ++j, ++vectors)
      for (int k = 0; k < dim; ++k) {
        const double p0 = qsim::hadamard_test(prep, j, static_cast<std::uint64_t>(k));
        const double want = (1.0 + vs[static_cast<size_t>(j)](k)) / 2.0;
        worst = std::max(worst, std::abs(p0 - want));
        t.add(o, j, dim, k, p0, want, std::abs(p0 - want));
      }
  }
  r.seconds = since(t0);
  r.pass = worst <= 1e-10 && r.seconds < 10.0;
  r.summary = "max |P(0) - (1 + <k|v_j>)/2| = " + fmt(worst) + " (<= 1e-10) over " + std::to_string(vectors) +
              " vectors, " + fmt(r.seconds, 2) + " s (< 10 s)";
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c03(std::uint64_t seed) {
  CriterionResult r;
  Table t("c03_median_stability",
          {"family", "L", "alpha", "side", "trials", "samples", "bound", "slack", "max_shift", "max_population_shift",
           "violations"});
  int violations = 0, cases = 0;
  double worst_ratio = 0.0;
  std::uint64_t idx = 0;
  for (const auto& dist :
       {robust::DistributionSpec::uniform_pm1(), robust::DistributionSpec::sine(), robust::DistributionSpec::cubic()}) {
    dist.validate();
    for (double alpha : {0.05, 0.1, 0.2})
      for (auto side : {robust::ContaminationSide::upper, robust::ContaminationSide::lower}) {
        const auto rep = robust::median_stability_check(dist, alpha, 100, 100000, derive_seed(seed, "acc-median", idx++),
                                                        side);
        violations += rep.violations;
        ++cases;
        worst_ratio = std::max(worst_ratio, rep.max_shift / (rep.bound + rep.slack));
        t.add(dist.name, dist.L, alpha, side == robust::ContaminationSide::upper ? "upper" : "lower", rep.trials,
              rep.samples, rep.bound, rep.slack, rep.max_shift, rep.max_population_shift, rep.violations);
      }
  }
  r.pass = violations == 0;
  r.summary = std::to_string(violations) + " violations in " + std::to_string(cases) +
              " x 100 seeds; max shift / (alpha L + 3 sigma) = " + fmt(worst_ratio);
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c04(std::uint64_t seed) {
  CriterionResult r;
  using namespace median;
  // (a) Exact (success-branch) oracles: every iterate within the envelope.
  Rng rng = make_rng(seed, "acc-binsearch");
  Table ta("c04_envelope", {"run", "epsilon", "epsilon_prime", "L", "p_max", "median", "final_error", "max_ratio"});
  int env_viol = 0;
  double worst_ratio = 0.0;
  for (int run = 0; run < 1000; ++run) {
    const double eps = uniform(rng, 0.01, 0.24);
    const double ep = uniform(rng, 0.0, 0.99) * eps / 4.0;
    const double L = uniform(rng, 1.0, 4.0);
    const auto cfg = MedianSearchConfig::make(eps, ep, L, 0.0);
    const double med = uniform(rng, 0.1, 0.9);
    auto cdf = [med, L](double y) { return std::clamp(0.5 + (y - med) / L, 0.0, 1.0); };
    CdfOracle oracle = [&](double y, Rng& g) {
      const double s = uniform01(g) < 0.5 ? -1.0 : 1.0;
      return CdfQuery{std::clamp(cdf(y) + s * cfg.epsilon0, 0.0, 1.0), true, 1};
    };
    const auto res = binary_search_median(oracle, cfg, rng);
    const double c = cfg.step_uncertainty();
    double ratio = 0.0;
    for (size_t p = 0; p < res.trace.size(); ++p) {
      const auto& s = res.trace[p];
      const double mid = s.left + (s.right - s.left) / 2.0;
      const double env = error_envelope(static_cast<int>(p) + 1, c);
      ratio = std::max(ratio, std::abs(mid - med) / env);
      if (std::abs(mid - med) > env + 1e-12) ++env_viol;
    }
    worst_ratio = std::max(worst_ratio, ratio);
    ta.add(run, eps, ep, L, cfg.p_max, med, std::abs(res.value - med), ratio);
  }

  // (b) Noisy oracles, delta0 = 0.01.
  Table tb("c04_noisy", {"runs", "p_max", "delta0", "failures", "frequency", "bound", "bound_3sigma"});
  const auto cfg = MedianSearchConfig::make(0.05, 0.01, 1.0, 0.01);
  const auto oracle = analytic_cdf_oracle([](double y) { return std::clamp(y, 0.0, 1.0); }, cfg, true);
  Rng nrng = make_rng(seed, "acc-binsearch-noisy");
  const int runs = 10000;
  int failures = 0;
  for (int i = 0; i < runs; ++i) failures += std::abs(binary_search_median(oracle, cfg, nrng).value - 0.5) > cfg.epsilon;
  const double bound = cfg.p_max * cfg.delta0;
  const double limit = bound + 3.0 * std::sqrt(bound * (1 - bound) / runs);
  const double freq = static_cast<double>(failures) / runs;
  tb.add(runs, cfg.p_max, cfg.delta0, failures, freq, bound, limit);

  // (c) Iteration budget against a doubling count.
  Table tc("c04_budget", {"epsilon", "epsilon_prime", "iteration_budget", "oracle"});
  int mismatches = 0;
  for (double eps : {0.01, 0.05, 0.1, 0.17, 0.24})
    for (double frac : {0.0, 0.2, 0.5, 0.8}) {
      const double ep = frac * eps / 4.0;
      const double target = (1 - 4 * eps) / (2 * (eps - 4 * ep));
      int p = 0;
      while (std::ldexp(1.0, p) < target) ++p;
      const int got = iteration_budget(eps, ep);
      mismatches += got != p;
      tc.add(eps, ep, got, p);
    }
  r.pass = env_viol == 0 && freq <= limit && mismatches == 0;
  r.summary = "envelope violations " + std::to_string(env_viol) + "/1000 runs (max err/envelope " + fmt(worst_ratio) +
              "); noisy failure freq " + fmt(freq) + " <= " + fmt(limit) + "; budget mismatches " +
              std::to_string(mismatches) + "/20";
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  r.tables.push_back(std::move(tc));
  return r;
}

CMatrix random_one_sparse(int n, Rng& rng) {
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  CMatrix m = CMatrix::Zero(n, n);
  int i = 0;
  for (; i + 1 < n && uniform01(rng) < 0.7; i += 2) {
    const Complex v(normal(rng), normal(rng));
    m(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(i) + 1]) = v;
    m(perm[static_cast<size_t>(i) + 1], perm[static_cast<size_t>(i)]) = std::conj(v);
  }
  for (; i < n; ++i)
    if (uniform01(rng) < 0.5) m(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(i)]) = normal(rng);
  return m;
}

CriterionResult c05(std::uint64_t seed) {
  CriterionResult r;
  Rng rng = make_rng(seed, "acc-onesparse");
  Table ta("c05_decomposition", {"trial", "dim", "d", "terms", "reconstruction_error"});
  int recon_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = trial % 2 ? 16 : 8, d = 2 + trial % 3;
    const CMatrix m = lcu::random_sparse_instance(dim, d, 1.0, rng);
    const auto dec = lcu::one_sparse_decompose(lcu::SparseHermitian::from_dense(m));
    const double err = (dec.sum() - m).cwiseAbs().maxCoeff();
    bool one_sparse = true;
    for (const auto& term : dec.terms) {
      const CMatrix td = term.dense();
      one_sparse = one_sparse && linalg::max_row_nonzeros(td) <= 1 && linalg::max_row_nonzeros(CMatrix(td.transpose())) <= 1;
    }
    recon_fail += err != 0.0 || !one_sparse;
    ta.add(trial, dim, d, dec.size(), err);
  }

  Table tb("c05_onesparse_norm", {"trial", "dim", "spectral", "max_entry", "difference"});
  int norm_fail = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const CMatrix c = random_one_sparse(2 + trial % 15, rng);
    const double s = spectral(c), mx = c.cwiseAbs().maxCoeff();
    norm_fail += std::abs(s - mx) > 1e-12 * std::max(1.0, mx);
    tb.add(trial, static_cast<int>(c.rows()), s, mx, std::abs(s - mx));
  }

  Table tc("c05_layer_bound", {"trial", "dim", "d", "layers", "norm", "max_diff", "layers_bound", "d2_bound"});
  int layer_fail = 0, d2_fail = 0, d2_checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + trial % 3, dim = trial % 2 ? 16 : 8;
    const CMatrix a = lcu::random_sparse_instance(dim, d, 1.0, rng);
    CMatrix b = a;
    for (int p = 0; p < dim; ++p)
      for (int q = p; q < dim; ++q)
        if (a(p, q) != Complex(0.0)) {
          const double e = uniform(rng, -0.1, 0.1);
          b(p, q) += e;
          if (q != p) b(q, p) += e;
        }
    const CMatrix diff = a - b;
    const int layers = lcu::one_sparse_decompose(diff).size();
    const double lhs = spectral(diff), mx = diff.cwiseAbs().maxCoeff();
    layer_fail += lhs > layers * mx * (1 + 1e-12);
    if (layers <= d + 2) {
      ++d2_checked;
      d2_fail += lhs > (d + 2) * mx * (1 + 1e-12);
    }
    tc.add(trial, dim, d, layers, lhs, mx, layers * mx, (d + 2) * mx);
  }
  r.pass = recon_fail == 0 && norm_fail == 0 && layer_fail == 0 && d2_fail == 0 && d2_checked > 0;
  r.summary = "reconstruction failures " + std::to_string(recon_fail) + "/100; one-sparse norm mismatches " +
              std::to_string(norm_fail) + "/500; layer bound violations " + std::to_string(layer_fail) +
              "/300; (d+2) bound violations " + std::to_string(d2_fail) + "/" + std::to_string(d2_checked);
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  r.tables.push_back(std::move(tc));
  return r;
}

CriterionResult c06(std::uint64_t seed) {
  CriterionResult r;
  const auto t0 = Clock::now();
  Table t("c06_noisy_lcu", {"dim", "d", "eta", "delta", "seeds", "M_disc", "K", "r", "max_norm_error", "bound_unit",
                            "max_ratio", "max_evolution_error", "truncation_bound"});
  double c_fit = 0.0;
  int noiseless_fail = 0;
  std::uint64_t inst = 0;
  for (int dim : {8, 16})
    for (int d : {2, 3}) {
      Rng irng = make_rng(seed, "acc-lcu-instance", inst++);
      const auto h = lcu::SparseHermitian::from_dense(lcu::random_sparse_instance(dim, d, 1.0, irng));
      for (double eta : {0.0, 1e-3, 1e-2})
        for (double delta : {0.0, 1e-3, 1e-2}) {
          double worst_err = 0.0, worst_ratio = 0.0, worst_evo = 0.0, unit = 0.0, trunc = 0.0;
          long M_disc = 0;
          int K = 0, reps = 0;
          for (int s = 0; s < 100; ++s) {
            Rng rng = make_rng(seed, "acc-lcu-seed", inst * 1000 + static_cast<std::uint64_t>(s));
            lcu::TaylorConfig cfg;
            cfg.eta = eta;
            cfg.delta = delta;
            const auto sim = lcu::simulate_noisy(lcu::NoisyMatrixOracle::random(h, eta, delta, rng), cfg);
            worst_err = std::max(worst_err, sim.norm_error);
            worst_evo = std::max(worst_evo, sim.evolution_error);
            unit = sim.bound_unit;
            trunc = sim.truncation_bound;
            M_disc = sim.M_disc;
            K = sim.K;
            reps = sim.r;
            if (sim.bound_unit > 0.0) worst_ratio = std::max(worst_ratio, sim.norm_error / sim.bound_unit);
            if (eta == 0.0 && delta == 0.0 && sim.evolution_error > sim.truncation_bound) ++noiseless_fail;
          }
          c_fit = std::max(c_fit, worst_ratio);
          t.add(dim, d, eta, delta, 100, M_disc, K, reps, worst_err, unit, worst_ratio, worst_evo, trunc);
        }
    }
  r.seconds = since(t0);
  r.pass = c_fit <= 4.0 && noiseless_fail == 0 && r.seconds < 600.0;
  r.summary = "fitted c = " + fmt(c_fit) + " (<= 4) over 4 instances x 8 noisy grid points x 100 seeds; noiseless "
              "truncation-bound violations " + std::to_string(noiseless_fail) + "/400; " + fmt(r.seconds, 3) +
              " s (< 600 s)";
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c07(std::uint64_t seed) {
  CriterionResult r;
  Table te("c07_exact_histograms", {"instance", "n", "eigenvalue", "gap", "overlap", "histogram", "expected"});
  Table tc("c07_chi_square", {"instance", "statistic", "dof", "critical", "pass"});
  int chi_fail = 0, unresolved = 0;
  qpca::QpcaOptions o;
  o.shots = 10000;
  for (int inst = 0; inst < 10; ++inst) {
    Rng rng = make_rng(seed, "acc-qpca-exact", static_cast<std::uint64_t>(inst));
    const auto M = HermitianOperator::from_real(qpca::gapped_instance(8, 0.2, rng));
    const auto x = qpca::random_unit_vector(8, rng);
    const auto rep = qpca::qpca_sample(M, x, o, rng);
    unresolved += !rep.resolved;
    const auto chi = qpca::multinomial_test(rep.histogram, rep.overlaps, o.shots);
    chi_fail += !chi.pass();
    tc.add(inst, chi.statistic, chi.dof, chi.critical, chi.pass());
    for (size_t n = 0; n < 8; ++n)
      te.add(inst, static_cast<int>(n), rep.eigenvalues[n], rep.gaps[n], rep.overlaps[n], rep.histogram[n],
             rep.expected[n]);
  }

  Table tl("c07_lcu_noisy", {"instance", "n", "gap", "overlap", "histogram", "sigma_pert", "budget", "shot_3sigma",
                             "deviation"});
  int budget_fail = 0;
  double worst_use = 0.0;
  qpca::QpcaOptions ol;
  ol.shots = 10000;
  ol.sim = qpca::SimMode::lcu_noisy;
  ol.lcu.eta = 1e-3;
  for (int inst = 0; inst < 5; ++inst) {
    Rng rng = make_rng(seed, "acc-qpca-lcu", static_cast<std::uint64_t>(inst));
    const auto M = HermitianOperator::from_real(qpca::gapped_instance(8, 0.2, rng));
    const auto x = qpca::random_unit_vector(8, rng);
    const auto rep = qpca::qpca_sample(M, x, ol, rng);
    for (size_t n = 0; n < 8; ++n) {
      const double budget = 4.0 * rep.sigma_pert / rep.gaps[n];
      const double p = rep.overlaps[n];
      const double shot = 3.0 * std::sqrt(std::max(p * (1 - p), 1e-12) / ol.shots);
      const double dev = std::abs(rep.histogram[n] - p);
      budget_fail += dev > budget + shot;
      worst_use = std::max(worst_use, dev / (budget + shot));
      tl.add(inst, static_cast<int>(n), rep.gaps[n], p, rep.histogram[n], rep.sigma_pert, budget, shot, dev);
    }
  }
  r.pass = chi_fail == 0 && unresolved == 0 && budget_fail == 0;
  r.summary = "exact mode: chi-square (3 sigma) failures " + std::to_string(chi_fail) +
              "/10 at 1e4 shots, unresolved " + std::to_string(unresolved) + "; lcu-noisy: budget violations " +
              std::to_string(budget_fail) + "/40 (max deviation / (4 sigma/lambda + 3 sigma_shot) = " +
              fmt(worst_use) + ")";
  r.tables.push_back(std::move(te));
  r.tables.push_back(std::move(tc));
  r.tables.push_back(std::move(tl));
  return r;
}

robust::RawDataset uniform_data(int count, int dim, Rng& rng) {
  robust::RawDataset d;
  for (int j = 0; j < count; ++j) {
    RVector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = uniform(rng, -1.0, 1.0);
    d.vectors.push_back(v);
  }
  d.R = std::sqrt(static_cast<double>(dim));
  return d;
}

CriterionResult c08(std::uint64_t seed) {
  CriterionResult r;
  Table t("c08_poisoning", {"seed", "alpha", "strategy", "R", "L", "d", "norm", "bound", "mean_norm", "within",
                            "mean_violates"});
  const double L = 2.0;  // inverse CDF of uniform[-1, 1]
  int robust_fail = 0, robust_runs = 0, mean_miss = 0, mean_runs = 0;
  double worst_ratio = 0.0;
  const std::vector<double> alphas{0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
  for (size_t ai = 0; ai < alphas.size(); ++ai) {
    const double alpha = alphas[ai];
    for (int s = 0; s < 50; ++s) {
      Rng rng = make_rng(seed, "acc-poison", ai * 100 + static_cast<std::uint64_t>(s));
      const auto d = uniform_data(400, 2, rng);
      // Corner replacement.
      robust::ContaminationSpec corner{alpha, robust::ContaminationStrategy::replace_prefix,
                                       {RVector::Constant(2, 1.0), RVector::Constant(2, -1.0)}, 0};
      const auto rc = qpca::poisoning_experiment(d, corner, L);
      ++robust_runs;
      robust_fail += !rc.within();
      worst_ratio = std::max(worst_ratio, rc.norm / rc.bound);
      t.add(s, alpha, "corner", d.R, L, rc.d, rc.norm, rc.bound, rc.mean_norm, rc.within(), rc.mean_violates());
      // Spike attack at large radius.
      for (double R : {10.0, 20.0}) {
        auto far = d;
        far.R = R;
        robust::ContaminationSpec spike{alpha, robust::ContaminationStrategy::spike_direction, {}, 0};
        const auto rs = qpca::poisoning_experiment(far, spike, L);
        ++robust_runs;
        robust_fail += !rs.within();
        worst_ratio = std::max(worst_ratio, rs.norm / rs.bound);
        if (alpha >= 0.1) {
          ++mean_runs;
          mean_miss += !rs.mean_violates();
        }
        t.add(s, alpha, "spike", R, L, rs.d, rs.norm, rs.bound, rs.mean_norm, rs.within(), rs.mean_violates());
      }
    }
  }
  r.pass = robust_fail == 0 && mean_miss == 0;
  r.summary = "robust bound violations " + std::to_string(robust_fail) + "/" + std::to_string(robust_runs) +
              " (max ||M-M'|| / 5 alpha L (d+2) = " + fmt(worst_ratio) + "); mean-based matrix exceeds the bound in " +
              std::to_string(mean_runs - mean_miss) + "/" + std::to_string(mean_runs) + " spike runs (alpha >= 0.1, R >= 10)";
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c09(std::uint64_t seed) {
  CriterionResult r;
  Rng rng = make_rng(seed, "acc-perturb");
  Table ta("c09_projector", {"triple", "dim", "lambda", "sigma", "bound", "shift", "weyl_ok"});
  int fail = 0, skipped = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int dim = uniform_int(rng, 3, 8);
    std::vector<double> spec;
    double v = uniform(rng, -1.5, -0.5);
    for (int i = 0; i < dim; ++i) {
      spec.push_back(v);
      v += uniform(rng, 0.05, 0.6);
    }
    const auto M = HermitianOperator::from_real(qpca::dense_with_spectrum(spec, rng));
    const auto eig = linalg::eig_hermitian(M);
    const int plus = uniform_int(rng, 1, dim - 1);
    std::vector<int> pi, mi;
    for (int i = dim - plus; i < dim; ++i) pi.push_back(i);
    for (int i = 0; i < dim - plus; ++i) mi.push_back(i);
    const auto split = qpca::make_split(eig, pi, mi);
    const double sigma = split.lambda / 10.0 * uniform(rng, 0.01, 1.0);
    const CMatrix delta = random_hermitian(dim, rng);
    const auto Mp = HermitianOperator::symmetrized(M.matrix() + sigma / spectral(delta) * delta);
    const auto rep = qpca::projector_perturbation_check(M, Mp, split, {random_state(dim, rng)});
    fail += !rep.within();
    skipped += rep.skipped;
    worst = std::max(worst, rep.max_projector_shift / rep.bound);
    ta.add(trial, dim, rep.lambda, rep.sigma, rep.bound, rep.max_projector_shift, rep.weyl_ok);
  }

  Table tb("c09_first_order", {"instance", "sigma", "remainder", "slope"});
  const std::vector<double> sigmas{1e-1, 1e-2, 1e-3, 1e-4};
  int slope_fail = 0;
  double lo = 1e9, hi = -1e9;
  for (int inst = 0; inst < 20; ++inst) {
    const int dim = 3 + inst % 5;
    std::vector<double> spec;
    double v = -1.0;
    for (int i = 0; i < dim; ++i) {
      spec.push_back(v);
      v += uniform(rng, 0.3, 0.8);
    }
    const auto M = HermitianOperator::from_real(qpca::dense_with_spectrum(spec, rng));
    const CMatrix dm = random_hermitian(dim, rng);
    const auto Delta = HermitianOperator::symmetrized(dm / spectral(dm));
    const auto rem = qpca::first_order_remainders(M, Delta, sigmas);
    const double slope = qpca::loglog_slope(sigmas, rem);
    slope_fail += std::abs(slope - 2.0) > 0.1;
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
    for (size_t i = 0; i < sigmas.size(); ++i) tb.add(inst, sigmas[i], rem[i], slope);
  }
  r.pass = fail == 0 && slope_fail == 0 && skipped == 0;
  r.summary = "projector bound violations " + std::to_string(fail) + "/1000 (max shift / (4 sigma/lambda) = " +
              fmt(worst) + "); remainder slopes in [" + fmt(lo, 4) + ", " + fmt(hi, 4) + "] (2.0 +- 0.1)";
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  return r;
}

CriterionResult c10(std::uint64_t seed) {
  using namespace boosting;
  CriterionResult r;
  Rng rng = make_rng(seed, "acc-boost");
  // (a) Weyl shifts under random attacks, checked with an independent solver.
  Table ta("c10_eigen_shift", {"attack", "classifiers", "dim", "alpha", "strategy", "replaced_mass", "eig_shift",
                               "bound"});
  int shift_fail = 0;
  auto eigvals = [](const HermitianOperator& h) {
    return Eigen::SelfAdjointEigenSolver<CMatrix>(h.matrix(), Eigen::EigenvaluesOnly).eigenvalues();
  };
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 10;
    const auto s = clustered_ensemble(n, 2 + t % 5, uniform(rng, 0.0, 1.5), t % 2 == 0, rng);
    AttackSpec a;
    a.alpha = uniform(rng, 0.0, 0.6);
    a.strategy = static_cast<AttackStrategy>(t % 3);
    a.target = random_state(s.ambient_dim, rng);
    a.target_class = t % 4 < 2 ? -1 : 1;
    for (int k = 0; k < 3; ++k)
      a.replacements.push_back(random_reflection(s.ambient_dim, uniform_int(rng, 0, s.ambient_dim), rng));
    const auto rep = attack_ensemble(s, a);
    const double shift = (eigvals(ensemble_operator(s)) - eigvals(ensemble_operator(rep.attacked))).cwiseAbs().maxCoeff();
    shift_fail += shift > 2.0 * a.alpha + 1e-12;
    ta.add(t, n, s.ambient_dim, a.alpha, t % 3, rep.replaced_mass, shift, 2.0 * a.alpha);
  }

  // (b) Class stability below gamma/4.
  Table tb("c10_stability", {"mode", "instance", "alpha", "gamma", "signs_preserved", "probes", "class_changes",
                             "max_mass_shift", "margin"});
  int sign_fail = 0, margin_fail = 0, qualifying_exh = 0, qualifying_rand = 0, probes_total = 0, changes = 0;
  int instance = 0;
  auto check = [&](const char* mode, const EnsembleSpec& s, const std::vector<int>& subset, AttackStrategy how,
                   const std::vector<CVector>& probes, int& qualifying) {
    double mass = 0.0;
    for (int j : subset) mass += s.weights[static_cast<size_t>(j)];
    const auto C = ensemble_operator(s);
    const double gamma = measured_gamma(C);
    ++instance;
    if (!(mass < gamma / 4.0)) return;
    ++qualifying;
    AttackSpec a;
    a.alpha = mass;
    a.indices = subset;
    a.strategy = how;
    a.target = probes.front();
    a.target_class = -1;
    a.replacements = {random_reflection(s.ambient_dim, 1, rng), random_reflection(s.ambient_dim, 0, rng)};
    const auto Cp = ensemble_operator(attack_ensemble(s, a).attacked);
    const bool signs = spectral_signs_preserved(C, Cp);
    sign_fail += !signs;
    const double margin = stability_margin(mass, gamma);
    double worst = 0.0;
    int changed = 0;
    for (const auto& psi : probes) {
      const double m0 = exact_positive_mass(C, psi), m1 = exact_positive_mass(Cp, psi);
      worst = std::max(worst, std::abs(m1 - m0));
      changed += (m0 > 0.5) != (m1 > 0.5);
    }
    margin_fail += worst > margin + 1e-12;
    probes_total += static_cast<int>(probes.size());
    changes += changed;
    tb.add(mode, instance, mass, gamma, signs, static_cast<int>(probes.size()), changed, worst, margin);
  };
  for (int t = 0; t < 40; ++t) {
    const auto s = clustered_ensemble(3, 3 + t % 3, 0.25, true, rng);
    std::vector<CVector> probes;
    for (int p = 0; p < 20; ++p) probes.push_back(random_state(s.ambient_dim, rng));
    for (int mask = 1; mask < 8; ++mask) {
      std::vector<int> subset;
      for (int j = 0; j < 3; ++j)
        if (mask >> j & 1) subset.push_back(j);
      for (auto how : {AttackStrategy::flip_worst, AttackStrategy::replace_target, AttackStrategy::custom})
        check("exhaustive", s, subset, how, probes, qualifying_exh);
    }
  }
  for (int t = 0; t < 120; ++t) {
    const int n = 10 + t % 16;
    const auto s = clustered_ensemble(n, 4, 0.3, t % 2 == 0, rng);
    std::vector<CVector> probes;
    for (int p = 0; p < 10; ++p) probes.push_back(random_state(4, rng));
    std::vector<int> subset;
    const double frac = uniform(rng, 0.05, 0.5);
    for (int j = 0; j < n; ++j)
      if (uniform01(rng) < frac) subset.push_back(j);
    if (subset.empty()) subset.push_back(0);
    check("randomized", s, subset, static_cast<AttackStrategy>(t % 3), probes, qualifying_rand);
  }

  // (c) Single-classifier attack on the mean classifier.
  Table tc("c10_mean_attack", {"N", "rep", "dim", "alpha", "gamma", "mean_before", "mean_after", "mass_before",
                               "mass_after", "eigenspace_class_after"});
  int flips = 0, instances = 0, eig_changes_below = 0, below = 0;
  for (int N = 2; N <= 25; ++N)
    for (int rep = 0; rep < 4; ++rep) {
      const auto inst = mean_attack_instance(N, 3 + rep, rng);
      const auto before = classify_by_mean(inst.psi, inst.spec);
      const auto att = attack_ensemble(inst.spec, inst.attack);
      const auto after = classify_by_mean(inst.psi, att.attacked);
      ++instances;
      flips += before.cls == 1 && after.cls == -1;
      const auto C = ensemble_operator(inst.spec), Cp = ensemble_operator(att.attacked);
      const double gamma = measured_gamma(C);
      const double m0 = exact_positive_mass(C, inst.psi), m1 = exact_positive_mass(Cp, inst.psi);
      if (1.0 / N < gamma / 4.0) {
        ++below;
        eig_changes_below += (m0 > 0.5) != (m1 > 0.5);
      }
      tc.add(N, rep, 3 + rep, 1.0 / N, gamma, before.expectation, after.expectation, m0, m1, m1 > 0.5 ? 1 : -1);
    }

  const bool proven = shift_fail == 0 && sign_fail == 0 && margin_fail == 0 && flips == instances &&
                      qualifying_exh > 0 && qualifying_rand > 0;
  r.pass = proven && changes == 0 && eig_changes_below == 0;
  if (proven && !r.pass)
    r.known_failure = "eigenvalue signs survive alpha < gamma/4 but eigenvectors rotate; the positive-band mass "
                      "of states near 1/2 can cross it";
  std::ostringstream s;
  s << "eig shift > 2 alpha in " << shift_fail << "/200; below gamma/4: sign flips " << sign_fail
    << ", margin violations " << margin_fail << ", random-probe class changes " << changes << "/" << probes_total
    << " (" << qualifying_exh << " exhaustive + " << qualifying_rand << " randomized attacks); mean flipped in "
    << flips << "/" << instances << "; constructed instances with alpha < gamma/4 whose eigenspace class changed: "
    << eig_changes_below << "/" << below;
  r.summary = s.str();
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  r.tables.push_back(std::move(tc));
  return r;
}

std::vector<RVector> ring(int n, double radius) {
  std::vector<RVector> c;
  for (int b = 0; b < n; ++b) {
    RVector v(2);
    v << radius * std::cos(2 * M_PI * b / n), radius * std::sin(2 * M_PI * b / n);
    c.push_back(v);
  }
  return c;
}

CriterionResult c11(std::uint64_t seed) {
  CriterionResult r;
  Table ta("c11_centroids", {"blobs", "epsilon", "trial", "round", "cluster", "component", "estimate", "exact",
                             "error"});
  int fail = 0, rounds = 0;
  double worst = 0.0;
  for (int nb : {2, 3})
    for (double eps : {0.1, 0.05, 0.02})
      for (int trial = 0; trial < 5; ++trial) {
        Rng rng = make_rng(seed, "acc-kmeans", static_cast<std::uint64_t>(nb * 1000 + static_cast<int>(eps * 1000) * 10 + trial));
        const auto centers = ring(nb, 0.6);
        const auto ps = kmeans::blobs(centers, 10000, 0.15, rng);
        kmeans::ProtocolConfig cfg;
        cfg.k = nb;
        cfg.epsilon = eps;
        cfg.max_rounds = 3;
        cfg.seed = derive_seed(seed, "acc-kmeans-ties", static_cast<std::uint64_t>(trial));
        std::vector<RVector> init;
        for (const auto& c : centers) init.push_back(0.5 * c);
        const auto res = kmeans::run_protocol(ps, cfg, init, rng);
        for (size_t rd = 0; rd < res.rounds.size(); ++rd) {
          const auto& round = res.rounds[rd];
          if (round.aborted) continue;
          ++rounds;
          const double err = kmeans::max_abs_diff(round.centroids, round.exact.centroids);
          worst = std::max(worst, err / eps);
          fail += err > eps;
          for (int p = 0; p < nb; ++p)
            for (int q = 0; q < 2; ++q) {
              const double e = round.centroids[static_cast<size_t>(p)](q), x = round.exact.centroids[static_cast<size_t>(p)](q);
              ta.add(nb, eps, trial, static_cast<int>(rd), p, q, e, x, std::abs(e - x));
            }
        }
      }

  Table tb("c11_statevector", {"N", "trial", "t", "quadrature", "scalar", "statevector", "difference"});
  Rng rng = make_rng(seed, "acc-kmeans-ghz");
  double sv_worst = 0.0;
  for (int n = 1; n <= 10; ++n)
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> th;
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += th.emplace_back(uniform(rng, -1.0, 1.0) / n);
      const double t = std::ldexp(1.0, trial * 2);
      for (int quad = 0; quad < 2; ++quad) {
        const double a = kmeans::readout_probability(sum, t, quad == 1);
        const double b = kmeans::ghz_statevector_probability(th, t, quad == 1);
        sv_worst = std::max(sv_worst, std::abs(a - b));
        tb.add(n, trial, t, quad, a, b, std::abs(a - b));
      }
    }
  r.pass = fail == 0 && rounds > 0 && sv_worst <= 1e-12;
  r.summary = "rounds with ||centroid - exact||_inf > eps: " + std::to_string(fail) + "/" + std::to_string(rounds) +
              " (max error/eps " + fmt(worst) + "); scalar vs state vector max diff " + fmt(sv_worst) + " at N <= 10";
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  return r;
}

CriterionResult c12(std::uint64_t) {
  CriterionResult r;
  Table t("c12_privacy", {"q", "N", "ratio", "p_opt_exact", "p_opt_closed", "difference", "bound", "excess"});
  double worst_diff = 0.0;
  int bound_fail = 0, exact_cases = 0;
  auto add = [&](int q, int N, bool exact) {
    kmeans::RotationBudget b;
    b.add_round(static_cast<std::uint64_t>(q), 0);
    const auto rep = kmeans::privacy_analysis(b, N, exact ? 10 : 0);
    const double diff = rep.exact_computed ? std::abs(rep.p_opt_exact - rep.p_opt_closed_form) : 0.0;
    if (rep.exact_computed) {
      ++exact_cases;
      worst_diff = std::max(worst_diff, diff);
    }
    const double p = rep.exact_computed ? rep.p_opt_exact : rep.p_opt_closed_form;
    bound_fail += p - 0.5 > rep.bound + 1e-15;
    t.add(q, N, static_cast<double>(q) / N, rep.exact_computed ? csv::format(rep.p_opt_exact) : std::string("NA"),
          rep.p_opt_closed_form, diff, rep.bound, p - 0.5);
  };
  for (int q = 1; q <= 10; ++q)
    for (int N : {q + 1, 2 * q + 1, 20, 100, 1000})
      if (q < N) add(q, N, true);
  for (double ratio : {0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    add(10, static_cast<int>(std::lround(10 / ratio)), true);
    add(static_cast<int>(std::lround(ratio * 100000)), 100000, false);
  }
  const auto none = kmeans::privacy_analysis(kmeans::RotationBudget{}, 100);
  t.add(0, 100, 0.0, csv::format(none.p_opt_exact), none.p_opt_closed_form, 0.0, none.bound, none.p_opt_exact - 0.5);
  r.pass = worst_diff <= 1e-9 && bound_fail == 0 && none.p_opt_exact == 0.5 && none.p_opt_closed_form == 0.5;
  r.summary = "max |P_exact - closed form| = " + fmt(worst_diff) + " over " + std::to_string(exact_cases) +
              " budgets <= 10 qubits; P - 1/2 > q/2N in " + std::to_string(bound_fail) +
              " cases over q/N in [0.01, 0.5]; non-participant P = " + csv::format(none.p_opt_exact);
  r.tables.push_back(std::move(t));
  return r;
}

CriterionResult c13(std::uint64_t seed) {
  CriterionResult r;
  Table ta("c13_median_charges", {"epsilon", "runs", "mean_charges", "p_max", "L", "polylog", "normalized"});
  Rng rng = make_rng(seed, "acc-scaling");
  std::vector<double> values(101);
  for (auto& v : values) v = uniform(rng, -1.0, 1.0);
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  std::vector<double> charges, normalized;
  for (double e : eps) {
    double sum = 0.0;
    median::MedianSearchConfig cfg;
    const int runs = 20;
    for (int i = 0; i < runs; ++i) {
      const auto est = median::estimate_list_median(values, median::Domain{-1.0, 1.0}, e, 0.01, rng, true);
      sum += static_cast<double>(est.charges);
      cfg = est.config;
    }
    // log(1/eps) log(L/eps) in the search's normalized units; the delta term
    // is constant at fixed delta0.
    const double polylog = std::log(1.0 / cfg.epsilon) * std::log(cfg.L / cfg.epsilon);
    charges.push_back(sum / runs);
    normalized.push_back(sum / runs / polylog);
    ta.add(e, runs, sum / runs, cfg.p_max, cfg.L, polylog, sum / runs / polylog);
  }
  const double raw_slope = qpca::loglog_slope(eps, charges);
  const double slope = qpca::loglog_slope(eps, normalized);

  Table tb("c13_lcu_charges", {"t", "target_error", "r", "K", "rK", "charges"});
  Rng lrng = make_rng(seed, "acc-scaling-lcu");
  const auto h = lcu::SparseHermitian::from_dense(lcu::random_sparse_instance(8, 2, 0.2, lrng));
  const auto oracle = lcu::NoisyMatrixOracle::random(h, 0.0, 0.0, lrng);
  int mismatch = 0, nonmonotone = 0;
  std::uint64_t prev_err_row = 0;
  for (double target : {1e-4, 1e-8, 1e-12}) {
    std::uint64_t prev = 0;
    for (double tt : {0.5, 1.0, 2.0, 4.0}) {
      lcu::TaylorConfig cfg;
      cfg.t = tt;
      cfg.target_error = target;
      const auto sim = lcu::simulate_noisy(oracle, cfg);
      const auto rk = static_cast<std::uint64_t>(sim.r) * static_cast<std::uint64_t>(sim.K);
      mismatch += sim.charges != rk;
      nonmonotone += sim.charges < prev;
      prev = sim.charges;
      if (tt == 1.0) {
        nonmonotone += sim.charges < prev_err_row;
        prev_err_row = sim.charges;
      }
      tb.add(tt, target, sim.r, sim.K, rk, sim.charges);
    }
  }
  r.pass = std::abs(slope + 2.0) <= 0.3 && mismatch == 0 && nonmonotone == 0;
  r.summary = "median charges / log(1/eps) log(L/eps): log-log slope " + fmt(slope, 4) +
              " (-2 +- 0.3; raw " + fmt(raw_slope, 4) + ") over eps {0.2..0.025}; LCU charges != rK in " +
              std::to_string(mismatch) + "/12, non-monotone steps " + std::to_string(nonmonotone);
  r.tables.push_back(std::move(ta));
  r.tables.push_back(std::move(tb));
  return r;
}

using Fn = CriterionResult (*)(std::uint64_t);

struct Entry {
  Fn fn;
  const char* title;
};

const Entry kEntries[] = {
    {c01, "embedding isometry"},
    {c02, "Hadamard test"},
    {c03, "median stability"},
    {c04, "binary-search median"},
    {c05, "one-sparse machinery"},
    {c06, "noisy-oracle LCU"},
    {c07, "QPCA sampling"},
    {c08, "poisoning bound"},
    {c09, "projector perturbation"},
    {c10, "boosting adversary"},
    {c11, "private k-means correctness"},
    {c12, "privacy"},
    {c13, "query-count scaling"},
};

}  // namespace

std::string criterion_title(int id) {
  if (id == 14) return "determinism";
  if (id < 1 || id > 13) throw Error("acceptance", "unknown criterion " + std::to_string(id));
  return kEntries[id - 1].title;
}

CriterionResult run_criterion(int id, std::uint64_t seed) {
  if (id < 1 || id > 13) throw Error("acceptance", "criterion " + std::to_string(id) + " has no standalone run");
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    r = kEntries[id - 1].fn(seed);
  } catch (const std::exception& e) {
    r = CriterionResult{};
    r.pass = false;
    r.summary = std::string("error: ") + e.what();
  }
  r.id = id;
  r.title = kEntries[id - 1].title;
  r.seconds = since(t0);
  return r;
}

int workers_from_env() {
  const char* v = std::getenv("AQML_WORKERS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw Error("acceptance", std::string("AQML_WORKERS must be a positive integer, got '") + v + "'");
  return static_cast<int>(std::min(n, 64L));
}

namespace {

// Runs `ids` on a pool of `workers` threads; results come back in `ids` order.
std::vector<CriterionResult> run_many(const std::vector<int>& ids, std::uint64_t seed, int workers) {
  std::vector<CriterionResult> out(ids.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i; (i = next++) < ids.size();) out[i] = run_criterion(ids[i], seed);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(ids.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return out;
}

std::vector<std::string> write_tables(const CriterionResult& r, const std::string& dir) {
  std::vector<std::string> paths;
  for (const auto& t : r.tables) paths.push_back(t.write_to(dir));
  return paths;
}

void print_line(std::ostream& log, const CriterionResult& r) {
  log << (r.pass ? "PASS" : r.known_failure.empty() ? "FAIL" : "FAIL (known)") << "  [" << std::setw(2) << r.id << "] " << r.title << ": " << r.summary
      << "  (" << std::fixed << std::setprecision(1) << r.seconds << " s)" << std::defaultfloat << std::endl;
  if (!r.pass && !r.known_failure.empty()) log << "        known failure: " << r.known_failure << std::endl;
}

}  // namespace

std::vector<CriterionResult> run_suite(const SuiteOptions& opts, std::ostream& log) {
  std::vector<int> ids = opts.only;
  if (ids.empty())
    for (int i = 1; i <= kCriteria; ++i) ids.push_back(i);
  for (int id : ids)
    if (id < 1 || id > kCriteria) throw Error("acceptance", "unknown criterion " + std::to_string(id));
  const bool determinism = std::find(ids.begin(), ids.end(), 14) != ids.end();
  std::vector<int> base;
  for (int id : ids)
    if (id != 14) base.push_back(id);
  if (determinism && base.empty())
    for (int i = 1; i <= 13; ++i) base.push_back(i);

  const auto run1 = (std::filesystem::path(opts.out_dir) / "run1").string();
  const auto run2 = (std::filesystem::path(opts.out_dir) / "run2").string();
  std::filesystem::remove_all(run1);
  std::filesystem::remove_all(run2);

  log << "seed " << opts.seed << ", workers " << opts.workers << ", artifacts in " << opts.out_dir << std::endl;
  const auto first = run_many(base, opts.seed, opts.workers);
  std::vector<CriterionResult> results;
  std::vector<std::string> paths;
  for (const auto& r : first) {
    for (auto& p : write_tables(r, run1)) paths.push_back(p);
    if (std::find(ids.begin(), ids.end(), r.id) != ids.end()) {
      print_line(log, r);
      results.push_back(r);
    }
  }

  if (determinism) {
    const auto t0 = Clock::now();
    CriterionResult d;
    d.id = 14;
    d.title = criterion_title(14);
    const auto second = run_many(base, opts.seed, opts.workers);
    int differing = 0, files = 0;
    std::string first_diff;
    for (const auto& r : second)
      for (const auto& t : r.tables) {
        const auto b = t.write_to(run2);
        const auto a = (std::filesystem::path(run1) / (t.name + ".csv")).string();
        ++files;
        if (!csv::identical_files(a, b)) {
          ++differing;
          if (first_diff.empty()) first_diff = t.name;
        }
      }
    bool same_verdicts = second.size() == first.size();
    for (size_t i = 0; same_verdicts && i < first.size(); ++i) same_verdicts = first[i].pass == second[i].pass;
    d.pass = differing == 0 && files > 0 && same_verdicts;
    d.summary = std::to_string(files - differing) + "/" + std::to_string(files) +
                " CSV artifacts byte-identical on rerun with the same seed" +
                (first_diff.empty() ? std::string() : "; first difference in " + first_diff) +
                (same_verdicts ? "" : "; verdicts differ between runs");
    d.seconds = since(t0);
    d.tables.clear();
    print_line(log, d);
    results.push_back(d);
  }

  int passed = 0;
  for (const auto& r : results) passed += r.pass;
  log << passed << "/" << results.size() << " criteria passed";
  if (const int known = static_cast<int>(results.size()) - passed - hard_failures(results); known > 0)
    log << ", " << known << " known failure" << (known > 1 ? "s" : "");
  log << std::endl;

  csv::Table summary("summary", {"criterion", "title", "pass", "known_failure"});
  summary.comments.push_back("seed=" + std::to_string(opts.seed));
  for (const auto& r : results) summary.add(r.id, r.title, r.pass, !r.pass && !r.known_failure.empty());
  summary.write_to(opts.out_dir);
  return results;
}

int hard_failures(const std::vector<CriterionResult>& results) {
  int n = 0;
  for (const auto& r : results) n += !r.pass && r.known_failure.empty();
  return n;
}

}  // namespace aqml::acceptance
