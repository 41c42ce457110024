#include "aqml/robust.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "aqml/error.hpp"
#include "aqml/statevec.hpp"

namespace aqml::robust {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error("robust-embedding", msg); }

std::vector<double> column(const RMatrix& m, Eigen::Index c) {
  std::vector<double> v(static_cast<size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) v[static_cast<size_t>(r)] = m(r, c);
  return v;
}

}  // namespace

void RawDataset::validate() const {
  if (vectors.empty()) return;
  const auto n = vectors.front().size();
  if (n < 1) fail("dataset vectors must have dimension >= 1");
  if (!(R >= 0.0) || !std::isfinite(R)) fail("norm bound R must be finite and >= 0");
  for (size_t j = 0; j < vectors.size(); ++j) {
    const auto& v = vectors[j];
    if (v.size() != n) fail("dataset vectors differ in dimension");
    if (!v.allFinite()) fail("dataset contains NaN or Inf");
    if (v.norm() > R * (1.0 + 1e-12) + 1e-300) {
      std::ostringstream os;
      os << "vector " << j << " has norm " << v.norm() << " > R = " << R;
      fail(os.str());
    }
  }
}

double RawDataset::max_norm() const {
  double m = 0.0;
  for (const auto& v : vectors) m = std::max(m, v.norm());
  return m;
}

UnitDataset embed(const RawDataset& raw) {
  raw.validate();
  UnitDataset out;
  out.dim = raw.dim();
  out.count = raw.count();
  out.R = raw.R;
  const int tags = out.tag_dim();
  const Eigen::Index total = static_cast<Eigen::Index>(out.dim) * tags;
  for (int j = 0; j < out.count; ++j) {
    const RVector& x = raw.vectors[static_cast<size_t>(j)];
    const double nx = x.norm();
    RVector dir = RVector::Zero(out.dim);
    double a0 = 0.0, aj = 1.0;
    if (raw.R > 0.0 && nx > 0.0) {
      dir = x / nx;
      a0 = std::min(1.0, nx / raw.R);
      aj = std::sqrt(std::max(0.0, 1.0 - a0 * a0));
    } else {
      dir(0) = 1.0;  // direction is irrelevant when the |0> tag weight vanishes
    }
    RVector ket = RVector::Zero(total), dag = RVector::Zero(total);
    for (int a = 0; a < out.dim; ++a) {
      const Eigen::Index base = static_cast<Eigen::Index>(a) * tags;
      ket(base) = dag(base) = dir(a) * a0;
      ket(base + j + 1) = dir(a) * aj;
      dag(base + j + 1 + out.count) = dir(a) * aj;
    }
    out.kets.push_back(std::move(ket));
    out.daggers.push_back(std::move(dag));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) fail("median of an empty list");
  const size_t n = values.size();
  const size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return lower + (upper - lower) / 2.0;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) fail("mean of an empty list");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

RMatrix feature_values(const RawDataset& data, InnerProductMode mode) {
  data.validate();
  const int nv = data.count(), n = data.dim();
  RMatrix f(nv, n);
  if (mode == InnerProductMode::exact || nv == 0) {
    for (int j = 0; j < nv; ++j) f.row(j) = data.vectors[static_cast<size_t>(j)].transpose();
    return f;
  }
  if (data.R <= 0.0) return RMatrix::Zero(nv, n);
  // v_j = x_j / R padded with the slack amplitude so every v_j is a unit vector.
  std::vector<RVector> units;
  for (const auto& x : data.vectors) {
    RVector v(n + 1);
    v.head(n) = x / data.R;
    v(n) = std::sqrt(std::max(0.0, 1.0 - v.head(n).squaredNorm()));
    v.normalize();
    units.push_back(std::move(v));
  }
  const auto prep = qsim::PrepOracle::from_vectors(units);
  for (int j = 0; j < nv; ++j)
    for (int k = 0; k < n; ++k)
      f(j, k) = data.R * (2.0 * qsim::hadamard_test(prep, j, static_cast<std::uint64_t>(k)) - 1.0);
  return f;
}

HermitianOperator robust_pca_matrix(const RawDataset& data, InnerProductMode mode) {
  if (data.count() < 1) fail("robust_pca_matrix needs at least one vector");
  const RMatrix f = feature_values(data, mode);
  const int n = data.dim(), nv = data.count();
  RMatrix dev(nv, n);
  for (int k = 0; k < n; ++k) {
    const double m = median(column(f, k));
    dev.col(k) = f.col(k).array() - m;
  }
  RMatrix out(n, n);
  std::vector<double> prod(static_cast<size_t>(nv));
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      for (int j = 0; j < nv; ++j) prod[static_cast<size_t>(j)] = dev(j, k) * dev(j, l);
      out(k, l) = out(l, k) = median(prod);
    }
  return HermitianOperator::from_real(out, 0.0);
}

HermitianOperator classical_pca_matrix(const RawDataset& data) {
  if (data.count() < 1) fail("classical_pca_matrix needs at least one vector");
  const RMatrix f = feature_values(data, InnerProductMode::exact);
  const int n = data.dim(), nv = data.count();
  RMatrix dev(nv, n);
  for (int k = 0; k < n; ++k) dev.col(k) = f.col(k).array() - mean(column(f, k));
  RMatrix out(n, n);
  std::vector<double> prod(static_cast<size_t>(nv));
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      for (int j = 0; j < nv; ++j) prod[static_cast<size_t>(j)] = dev(j, k) * dev(j, l);
      out(k, l) = out(l, k) = mean(prod);
    }
  return HermitianOperator::from_real(out, 0.0);
}

int ContaminationSpec::replaced_count(int n) const {
  if (!(alpha >= 0.0 && alpha < 1.0)) fail("contamination alpha must lie in [0, 1)");
  return static_cast<int>(std::floor(alpha * n + 1e-12));
}

RawDataset poison(const RawDataset& data, const ContaminationSpec& spec) {
  data.validate();
  const int nv = data.count();
  const int m = spec.replaced_count(nv);
  RawDataset out = data;
  if (m == 0) return out;
  const int n = data.dim();

  auto check = [&](const RVector& v) {
    if (v.size() != n) fail("adversary vector has the wrong dimension");
    if (v.norm() > data.R * (1.0 + 1e-12)) fail("adversary vector exceeds the norm bound R");
  };

  std::vector<int> positions(static_cast<size_t>(nv));
  std::iota(positions.begin(), positions.end(), 0);
  switch (spec.strategy) {
    case ContaminationStrategy::replace_prefix: {
      if (spec.adversary_vectors.empty()) fail("replace-prefix needs adversary vectors");
      for (const auto& v : spec.adversary_vectors) check(v);
      for (int i = 0; i < m; ++i)
        out.vectors[static_cast<size_t>(i)] =
            spec.adversary_vectors[static_cast<size_t>(i) % spec.adversary_vectors.size()];
      break;
    }
    case ContaminationStrategy::spike_direction: {
      RVector u = RVector::Zero(n);
      if (spec.adversary_vectors.empty()) {
        u(0) = 1.0;
      } else {
        if (spec.adversary_vectors.front().size() != n) fail("spike direction has the wrong dimension");
        if (spec.adversary_vectors.front().norm() == 0.0) fail("spike direction is the zero vector");
        u = spec.adversary_vectors.front().normalized();
      }
      for (int i = 0; i < m; ++i) out.vectors[static_cast<size_t>(i)] = data.R * u;
      break;
    }
    case ContaminationStrategy::custom: {
      if (spec.adversary_vectors.empty()) fail("custom contamination needs adversary vectors");
      for (const auto& v : spec.adversary_vectors) check(v);
      Rng rng(derive_seed(spec.seed, "poison-custom"));
      std::shuffle(positions.begin(), positions.end(), rng);
      for (int i = 0; i < m; ++i)
        out.vectors[static_cast<size_t>(positions[static_cast<size_t>(i)])] =
            spec.adversary_vectors[static_cast<size_t>(i) % spec.adversary_vectors.size()];
      break;
    }
  }
  return out;
}

void DistributionSpec::validate() const {
  if (!Q) fail("distribution has no inverse CDF");
  if (!(L > 0.0)) fail("Lipschitz constant must be positive");
  const int grid = 1000;
  double prev = Q(0.0);
  for (int i = 1; i <= grid; ++i) {
    const double u = static_cast<double>(i) / grid;
    const double q = Q(u);
    if (q < -1.0 - 1e-12 || q > 1.0 + 1e-12) fail(name + ": inverse CDF leaves [-1, 1]");
    if (std::abs(q - prev) > L / grid * (1.0 + 1e-9)) fail(name + ": Lipschitz bound violated");
    prev = q;
  }
}

DistributionSpec DistributionSpec::uniform_pm1() {
  return {"uniform", [](double u) { return 2.0 * u - 1.0; }, 2.0};
}

DistributionSpec DistributionSpec::sine() {
  return {"sine", [](double u) { return std::sin(std::numbers::pi * (u - 0.5)); }, std::numbers::pi};
}

DistributionSpec DistributionSpec::cubic() {
  return {"cubic",
          [](double u) {
            const double s = 2.0 * u - 1.0;
            return 0.5 * (s + s * s * s);
          },
          4.0};
}

MedianStabilityReport median_stability_check(const DistributionSpec& dist, double alpha, int trials,
                                             int samples, std::uint64_t seed, ContaminationSide side) {
  dist.validate();
  if (!(alpha >= 0.0 && alpha < 0.5)) fail("median stability needs 0 <= alpha < 1/2");
  if (samples < 1 || trials < 1) fail("median stability needs samples, trials >= 1");
  MedianStabilityReport rep;
  rep.alpha = alpha;
  rep.trials = trials;
  rep.samples = samples;
  rep.bound = alpha * dist.L;
  rep.slack = 3.0 * dist.L * 0.5 / std::sqrt(static_cast<double>(samples));
  const double truth = dist.Q(0.5);
  const int moved = static_cast<int>(std::floor(alpha * samples));
  // Far beyond the [-1, 1] support of every family.
  const double far = side == ContaminationSide::upper ? 1e6 : -1e6;
  std::vector<double> xs(static_cast<size_t>(samples));
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, "median-stability", static_cast<std::uint64_t>(t));
    for (auto& x : xs) x = dist.sample(rng);
    std::sort(xs.begin(), xs.end());
    const double clean = median(xs);
    if (side == ContaminationSide::upper)
      std::fill(xs.begin(), xs.begin() + moved, far);
    else
      std::fill(xs.end() - moved, xs.end(), far);
    const double dirty = median(xs);
    const double shift = std::abs(dirty - clean);
    rep.max_shift = std::max(rep.max_shift, shift);
    rep.max_population_shift = std::max(rep.max_population_shift, std::abs(dirty - truth));
    total += shift;
    if (shift > rep.bound + rep.slack) ++rep.violations;
  }
  rep.mean_shift = total / trials;
  return rep;
}

RawDataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail("dataset CSV is empty");
  RawDataset out;
  int dim = 0;
  {
    std::stringstream ss(line);
    std::string k1, v1, k2, v2;
    if (!std::getline(ss, k1, ',') || !std::getline(ss, v1, ',') || !std::getline(ss, k2, ',') ||
        !std::getline(ss, v2) || k1 != "dim" || k2 != "R")
      fail("dataset CSV header must be 'dim,<N>,R,<R>'");
    try {
      size_t used = 0;
      dim = std::stoi(v1, &used);
      if (used != v1.size()) throw std::invalid_argument(v1);
      out.R = std::stod(v2, &used);
      if (used != v2.size()) throw std::invalid_argument(v2);
    } catch (const std::exception&) {
      fail("dataset CSV header has non-numeric dim or R");
    }
    if (dim < 1) fail("dataset CSV dim must be >= 1");
  }
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        fail("dataset CSV row " + std::to_string(row) + ": unparsable value '" + cell + "'");
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size())
        fail("dataset CSV row " + std::to_string(row) + ": unparsable value '" + cell + "'");
      if (!std::isfinite(v)) fail("dataset CSV row " + std::to_string(row) + ": NaN/Inf rejected");
      vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != dim)
      fail("dataset CSV row " + std::to_string(row) + ": expected " + std::to_string(dim) + " values");
    out.vectors.push_back(Eigen::Map<RVector>(vals.data(), dim));
  }
  out.validate();
  return out;
}

void write_dataset_csv(std::ostream& out, const RawDataset& data) {
  out << "dim," << data.dim() << ",R," << std::setprecision(17) << data.R << "\n";
  for (const auto& v : data.vectors) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << std::setprecision(17) << v(i);
    out << "\n";
  }
}

RawDataset synthetic_dataset(const DistributionSpec& dist, int count, int dim, Rng& rng) {
  RawDataset out;
  for (int j = 0; j < count; ++j) {
    RVector v(dim);
    for (int k = 0; k < dim; ++k) v(k) = dist.sample(rng);
    out.vectors.push_back(std::move(v));
  }
  out.R = std::max(out.max_norm(), std::sqrt(static_cast<double>(dim)));
  return out;
}

}  // namespace aqml::robust
