#include "aqml/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "aqml/acceptance.hpp"
#include "aqml/boosting.hpp"
#include "aqml/csv.hpp"
#include "aqml/error.hpp"
#include "aqml/kmeans.hpp"
#include "aqml/median.hpp"
#include "aqml/qpca.hpp"
#include "aqml/rng.hpp"
#include "aqml/robust.hpp"

namespace aqml::experiment {

using nlohmann::json;
using linalg::CVector;
using linalg::RVector;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error("config", msg); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

json defaults(Command c) {
  json j = {{"seed", 1}, {"trials", 1}, {"output", "aqml_out"}, {"subcommand", nullptr}};
  switch (c) {
    case Command::qpca:
      j["dataset"] = {{"source", "synthetic"}, {"family", "uniform"}, {"count", 400}, {"dim", 4}, {"path", nullptr}};
      j["qpca"] = {{"alphas", {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45}},
                   {"strategy", "replace_prefix"},
                   {"L", nullptr},
                   {"matrix_mode", "exact_median"},
                   {"gamma", 0.05},
                   {"delta", 0.05},
                   {"bits", 12},
                   {"shots", 10000},
                   {"sim", "exact_exp"},
                   {"lcu_eta", 0.0},
                   {"lcu_delta", 0.0},
                   {"median", {{"epsilon", 0.05}, {"delta0", 0.01}}}};
      break;
    case Command::boost:
      j["dataset"] = {{"source", "synthetic"}, {"family", "two_class"}, {"count", 200}, {"dim", 4},
                      {"separation", 2.0},     {"path", nullptr},       {"labels_path", nullptr}};
      j["boost"] = {{"classifiers", 7},
                    {"alphas", {0.0, 0.05, 0.1, 0.2, 0.3}},
                    {"strategy", "flip_worst"},
                    {"target_class", -1},
                    {"bits", 10},
                    {"shots", 1000},
                    {"sim", "exact_exp"},
                    {"tie_positive", true},
                    {"test_points", 4}};
      break;
    case Command::kmeans:
      j["dataset"] = {{"source", "synthetic"},
                      {"family", "blobs"},
                      {"count", 1000000},
                      {"centers", {{0.5, 0.5}, {-0.5, -0.5}}},
                      {"spread", 0.15},
                      {"path", nullptr}};
      j["kmeans"] = {{"k", 2},
                     {"epsilon", 0.1},
                     {"max_rounds", 5},
                     {"converge_tol", 0.0},
                     {"privacy_delta", 0.5},
                     {"planning_min_fraction", nullptr},
                     {"init", nullptr},
                     {"channel_attack", false},
                     {"schedule", {{"c", 8.0}, {"shots", 12}, {"slope", 2}}}};
      break;
    case Command::verify:
      j["seed"] = acceptance::SuiteOptions{}.seed;
      j["verify"] = {{"criteria", json::array()}};
      break;
  }
  return j;
}

json merge(const json& def, const json& user, const std::string& path) {
  if (!user.is_object()) bad((path.empty() ? std::string("config") : path) + ": expected an object");
  json out = def;
  for (const auto& [k, v] : user.items()) {
    const std::string p = path.empty() ? k : path + "." + k;
    if (!def.contains(k)) bad("unknown key '" + p + "'");
    out[k] = def[k].is_object() ? merge(def[k], v, p) : v;
  }
  return out;
}

// Typed access into the merged document with dotted-path error messages.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Reader sub(const std::string& k) const { return {j_.at(k), key(k)}; }
  bool null(const std::string& k) const { return j_.at(k).is_null(); }

  double number(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_number()) bad(key(k) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) bad(key(k) + ": must be finite");
    return x;
  }
  long long integer(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_number_integer()) bad(key(k) + ": expected an integer");
    return v.get<long long>();
  }
  int count(const std::string& k, long long lo, long long hi) const {
    const long long v = integer(k);
    if (v < lo || v > hi) bad(key(k) + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(v);
  }
  bool boolean(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_boolean()) bad(key(k) + ": expected true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_string()) bad(key(k) + ": expected a string");
    return v.get<std::string>();
  }
  std::string choice(const std::string& k, const std::vector<std::string>& allowed) const {
    const std::string v = text(k);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string all;
      for (const auto& a : allowed) all += (all.empty() ? "" : ", ") + a;
      bad(key(k) + ": '" + v + "' is not one of " + all);
    }
    return v;
  }
  std::vector<double> numbers(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_array()) bad(key(k) + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) bad(key(k) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<RVector> vectors(const std::string& k) const {
    const auto& v = j_.at(k);
    if (!v.is_array() || v.empty()) bad(key(k) + ": expected a non-empty array of vectors");
    std::vector<RVector> out;
    for (const auto& row : v) {
      if (!row.is_array() || row.empty()) bad(key(k) + ": expected a non-empty array of vectors");
      RVector x(static_cast<Eigen::Index>(row.size()));
      for (size_t i = 0; i < row.size(); ++i) {
        if (!row[i].is_number()) bad(key(k) + ": vector entries must be numbers");
        x(static_cast<Eigen::Index>(i)) = row[i].get<double>();
      }
      if (!out.empty() && x.size() != out.front().size()) bad(key(k) + ": vectors differ in length");
      out.push_back(std::move(x));
    }
    return out;
  }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

private:
  const json& j_;
  std::string path_;
};

// ---- typed parameters --------------------------------------------------

struct DatasetParams {
  bool synthetic = true;
  std::string family, path, labels_path;
  int count = 0, dim = 0;
  double separation = 0.0, spread = 0.0;
  std::vector<RVector> centers;
};

struct QpcaParams {
  std::vector<double> alphas;
  robust::ContaminationStrategy strategy = robust::ContaminationStrategy::replace_prefix;
  std::optional<double> L;
  qpca::BuildOptions build;
  qpca::QpcaOptions sample;
  double median_epsilon = 0.05, median_delta0 = 0.01;
};

struct BoostParams {
  int classifiers = 7, test_points = 4, target_class = -1;
  std::vector<double> alphas;
  boosting::AttackStrategy strategy = boosting::AttackStrategy::flip_worst;
  boosting::ClassifyOptions classify;
};

struct KmeansParams {
  kmeans::ProtocolConfig protocol;
  double user_privacy_delta = 0.5;
  double planning_min_fraction = 0.0;
  std::vector<RVector> init;
  bool channel_attack = false;
};

struct Params {
  std::uint64_t seed = 1;
  int trials = 1;
  std::string output;
  DatasetParams dataset;
  QpcaParams qpca;
  BoostParams boost;
  KmeansParams kmeans;
  std::vector<int> criteria;
};

DatasetParams read_dataset(const Reader& r, Command c) {
  DatasetParams d;
  d.synthetic = r.choice("source", {"synthetic", "file"}) == "synthetic";
  if (!d.synthetic) {
    if (r.null("path")) bad(r.key("path") + ": required when source is 'file'");
    d.path = r.text("path");
    if (c == Command::boost) {
      if (r.null("labels_path")) bad(r.key("labels_path") + ": required when source is 'file'");
      d.labels_path = r.text("labels_path");
    }
    return d;
  }
  switch (c) {
    case Command::qpca:
      d.family = r.choice("family", {"uniform", "sine", "cubic"});
      d.count = r.count("count", 2, 1000000);
      d.dim = r.count("dim", 1, 64);
      break;
    case Command::boost:
      d.family = r.choice("family", {"two_class"});
      d.count = r.count("count", 4, 1000000);
      d.dim = r.count("dim", 1, 64);
      d.separation = r.number("separation");
      if (!(d.separation > 0.0)) bad(r.key("separation") + ": must be > 0");
      break;
    case Command::kmeans:
      d.family = r.choice("family", {"blobs"});
      d.count = r.count("count", 1, 100000000);
      d.centers = r.vectors("centers");
      d.spread = r.number("spread");
      if (!(d.spread >= 0.0)) bad(r.key("spread") + ": must be >= 0");
      for (const auto& x : d.centers)
        if (x.cwiseAbs().maxCoeff() > 1.0) bad(r.key("centers") + ": coordinates must lie in [-1, 1]");
      break;
    case Command::verify:
      break;
  }
  return d;
}

robust::DistributionSpec family(const std::string& name) {
  if (name == "sine") return robust::DistributionSpec::sine();
  if (name == "cubic") return robust::DistributionSpec::cubic();
  return robust::DistributionSpec::uniform_pm1();
}

QpcaParams read_qpca(const Reader& r) {
  QpcaParams p;
  p.alphas = r.numbers("alphas");
  if (p.alphas.empty()) bad(r.key("alphas") + ": at least one value required");
  for (double a : p.alphas)
    if (!(a >= 0.0 && a < 0.5)) bad(r.key("alphas") + ": every alpha must lie in [0, 1/2)");
  p.strategy = r.choice("strategy", {"replace_prefix", "spike_direction"}) == "replace_prefix"
                   ? robust::ContaminationStrategy::replace_prefix
                   : robust::ContaminationStrategy::spike_direction;
  if (!r.null("L")) {
    p.L = r.number("L");
    if (!(*p.L > 0.0)) bad(r.key("L") + ": must be > 0");
  }
  p.build.mode = r.choice("matrix_mode", {"exact_median", "quantum_median"}) == "exact_median"
                     ? qpca::MatrixMode::exact_median
                     : qpca::MatrixMode::quantum_median;
  p.build.gamma = r.number("gamma");
  p.build.delta = r.number("delta");
  if (!(p.build.gamma > 0.0)) bad(r.key("gamma") + ": must be > 0");
  if (!(p.build.delta > 0.0 && p.build.delta < 1.0)) bad(r.key("delta") + ": must lie in (0, 1)");
  p.sample.bits = r.count("bits", 1, 20);
  p.sample.shots = r.count("shots", 1, 100000000);
  p.sample.sim = r.choice("sim", {"exact_exp", "lcu_noisy"}) == "exact_exp" ? qpca::SimMode::exact_exp
                                                                               : qpca::SimMode::lcu_noisy;
  p.sample.lcu.eta = r.number("lcu_eta");
  p.sample.lcu.delta = r.number("lcu_delta");
  if (!(p.sample.lcu.eta >= 0.0) || !(p.sample.lcu.delta >= 0.0)) bad(r.key("lcu_eta") + ", lcu_delta: must be >= 0");

  const Reader m = r.sub("median");
  p.median_epsilon = m.number("epsilon");
  p.median_delta0 = m.number("delta0");
  // Normalized precision; the search's own admissibility rules apply.
  try {
    median::MedianSearchConfig::make(p.median_epsilon, p.median_epsilon / 8.0, 1.0, p.median_delta0);
  } catch (const Error& e) {
    bad(m.key("epsilon") + ": " + e.what());
  }
  return p;
}

BoostParams read_boost(const Reader& r) {
  BoostParams p;
  p.classifiers = r.count("classifiers", 2, 10000);
  p.alphas = r.numbers("alphas");
  if (p.alphas.empty()) bad(r.key("alphas") + ": at least one value required");
  for (double a : p.alphas)
    if (!(a >= 0.0 && a < 1.0)) bad(r.key("alphas") + ": every alpha must lie in [0, 1)");
  p.strategy = r.choice("strategy", {"flip_worst", "replace_target"}) == "flip_worst"
                   ? boosting::AttackStrategy::flip_worst
                   : boosting::AttackStrategy::replace_target;
  p.target_class = static_cast<int>(r.integer("target_class"));
  if (p.target_class != 1 && p.target_class != -1) bad(r.key("target_class") + ": must be +1 or -1");
  p.classify.bits = r.count("bits", 1, 16);
  p.classify.shots = r.count("shots", 0, 100000000);
  p.classify.sim = r.choice("sim", {"exact_exp", "lcu_taylor"}) == "exact_exp" ? boosting::SimMode::exact_exp
                                                                                : boosting::SimMode::lcu_taylor;
  p.classify.tie_positive = r.boolean("tie_positive");
  p.test_points = r.count("test_points", 1, 100000);
  return p;
}

double effective_privacy_delta(double user, int N) {
  // Keeps q1 + q2 < N whatever the user asked for.
  double d = std::min(user, 0.5 * std::sin(static_cast<double>(N - 1) / (2.0 * N)));
  while (d > 0.0 && kmeans::rotation_cap(d, N) >= static_cast<std::uint64_t>(N)) d = std::nextafter(d, 0.0);
  return d;
}

void check_budget(const KmeansParams& p, int N) {
  const auto planned = kmeans::rotation_budget(p.protocol, p.protocol.max_rounds, p.planning_min_fraction);
  if (planned.total() >= static_cast<std::uint64_t>(N))
    throw Error("kmeans", "planned rotations q1 + q2 = " + std::to_string(planned.q1) + " + " +
                              std::to_string(planned.q2) + " >= N = " + std::to_string(N) +
                              "; privacy requires q1 + q2 < N (more participants, fewer rounds or larger epsilon)");
}

KmeansParams read_kmeans(const Reader& r, const DatasetParams& data) {
  KmeansParams p;
  auto& pc = p.protocol;
  pc.k = r.count("k", 1, 1000);
  pc.epsilon = r.number("epsilon");
  if (!(pc.epsilon > 0.0 && pc.epsilon < 1.0)) bad(r.key("epsilon") + ": must lie in (0, 1)");
  pc.max_rounds = r.count("max_rounds", 1, 100000);
  pc.converge_tol = r.number("converge_tol");
  p.user_privacy_delta = r.number("privacy_delta");
  if (!(p.user_privacy_delta > 0.0)) bad(r.key("privacy_delta") + ": must be > 0");
  p.planning_min_fraction = r.null("planning_min_fraction") ? 1.0 / (2.0 * pc.k) : r.number("planning_min_fraction");
  if (!(p.planning_min_fraction > pc.epsilon && p.planning_min_fraction <= 1.0))
    bad(r.key("planning_min_fraction") + ": must lie in (epsilon, 1]");
  if (!r.null("init")) {
    p.init = r.vectors("init");
    if (static_cast<int>(p.init.size()) != pc.k) bad(r.key("init") + ": need exactly k centroids");
  }
  p.channel_attack = r.boolean("channel_attack");
  const Reader s = r.sub("schedule");
  pc.schedule.c = s.number("c");
  pc.schedule.shots = s.count("shots", 1, 100000);
  pc.schedule.slope = s.count("slope", 1, 64);
  if (data.synthetic) {
    pc.d = static_cast<int>(data.centers.front().size());
    if (!p.init.empty() && p.init.front().size() != pc.d) bad(r.key("init") + ": dimension differs from the data");
  }
  try {
    pc.validate();
  } catch (const Error& e) {
    bad(std::string("kmeans: ") + e.what());
  }
  if (data.synthetic) {
    pc.privacy_delta = effective_privacy_delta(p.user_privacy_delta, data.count);
    check_budget(p, data.count);
  }
  return p;
}

Params read_params(const json& j, Command c) {
  const Reader r(j, "");
  Params p;
  if (!r.null("subcommand") && r.text("subcommand") != command_name(c))
    bad("subcommand: config is for '" + r.text("subcommand") + "', not '" + command_name(c) + "'");
  const long long seed = r.integer("seed");
  if (seed < 0) bad("seed: must be >= 0");
  p.seed = static_cast<std::uint64_t>(seed);
  p.trials = r.count("trials", 1, 100000);
  p.output = r.text("output");
  if (p.output.empty()) bad("output: must not be empty");
  if (c != Command::verify) p.dataset = read_dataset(r.sub("dataset"), c);
  switch (c) {
    case Command::qpca: {
      p.qpca = read_qpca(r.sub("qpca"));
      if (!p.dataset.synthetic && !p.qpca.L) bad("qpca.L: required when the dataset comes from a file");
      const double L = p.qpca.L.value_or(family(p.dataset.family).L);
      for (double a : p.qpca.alphas)
        if (a * L > 1.0) bad("qpca.alphas: alpha L <= 1 required (alpha = " + fmt(a) + ", L = " + fmt(L) + ")");
      break;
    }
    case Command::boost:
      p.boost = read_boost(r.sub("boost"));
      break;
    case Command::kmeans:
      p.kmeans = read_kmeans(r.sub("kmeans"), p.dataset);
      break;
    case Command::verify: {
      const auto ids = Reader(j.at("verify"), "verify").numbers("criteria");
      for (double id : ids) {
        if (id != std::floor(id) || id < 1 || id > acceptance::kCriteria)
          bad("verify.criteria: ids must be integers in [1, " + std::to_string(acceptance::kCriteria) + "]");
        p.criteria.push_back(static_cast<int>(id));
      }
      break;
    }
  }
  return p;
}

// "# a.b=value" lines for every leaf of the merged config.
void flatten(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object())
      flatten(v, key, out);
    else
      out.push_back(key + "=" + v.dump());
  }
}

// ---- runners -------------------------------------------------------------

template <typename T, typename F>
std::vector<T> parallel_trials(int n, int workers, F f) {
  std::vector<T> out(static_cast<size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i; (i = next++) < n;) {
      try {
        out[static_cast<size_t>(i)] = f(i);
      } catch (...) {
        errors[static_cast<size_t>(i)] = std::current_exception();
      }
    }
  };
  const int w = std::max(1, std::min(workers, n));
  std::vector<std::thread> pool;
  for (int i = 1; i < w; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

using Rows = std::vector<std::vector<std::string>>;

template <typename... Ts>
void add_row(Rows& rows, const Ts&... cells) {
  rows.push_back({csv::format(cells)...});
}

std::ifstream open_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("config", "cannot open " + path);
  return f;
}

robust::RawDataset load_raw(const std::string& path) {
  auto f = open_input(path);
  auto data = robust::read_dataset_csv(f);
  data.validate();
  return data;
}

// Trial t uses root seed + t, so a row can be reproduced with --seed alone.
std::uint64_t trial_seed(const Params& p, int t) { return p.seed + static_cast<std::uint64_t>(t); }

struct QpcaTrial {
  Rows rows, medians;
  int violations = 0, unresolved = 0;
  double worst_ratio = 0.0, worst_lambda = 0.0, worst_median = 0.0;
};

QpcaTrial qpca_trial(const Params& p, const robust::RawDataset* file_data, int t) {
  const std::uint64_t root = trial_seed(p, t);
  const auto& q = p.qpca;
  robust::RawDataset data;
  double L = 0.0;
  if (file_data) {
    data = *file_data;
    L = *q.L;
  } else {
    const auto dist = family(p.dataset.family);
    Rng rng = make_rng(root, "cli-qpca-data");
    data = robust::synthetic_dataset(dist, p.dataset.count, p.dataset.dim, rng);
    L = q.L.value_or(dist.L);
  }
  const int d = data.dim();

  QpcaTrial out;
  for (size_t i = 0; i < q.alphas.size(); ++i) {
    robust::ContaminationSpec spec;
    spec.alpha = q.alphas[i];
    spec.strategy = q.strategy;
    spec.seed = derive_seed(root, "cli-qpca-poison", i);
    if (q.strategy == robust::ContaminationStrategy::replace_prefix)
      spec.adversary_vectors = {RVector::Constant(d, data.R / std::sqrt(static_cast<double>(d)))};
    const auto rep = qpca::poisoning_experiment(data, spec, L);
    const auto poisoned = robust::poison(data, spec);

    Rng rb = make_rng(root, "cli-qpca-build", i), rx = make_rng(root, "cli-qpca-probe", i),
        rs = make_rng(root, "cli-qpca-sample", i), rm = make_rng(root, "cli-qpca-median", i);
    const auto built = qpca::build_matrix(poisoned, q.build, rb);
    const CVector x = qpca::random_unit_vector(d, rx);
    const auto sample = qpca::qpca_sample(built.M, x, q.sample, rs);
    const std::uint64_t queries =
        built.charges + (q.sample.sim == qpca::SimMode::lcu_noisy ? sample.charges : sample.qpe_applications);
    add_row(out.rows, root, rep.alpha, rep.L, rep.d, rep.norm, rep.bound, sample.lambda_measured, queries);
    out.violations += rep.norm > rep.bound;
    out.worst_ratio = std::max(out.worst_ratio, rep.norm / rep.bound);
    if (sample.resolved)
      out.worst_lambda = std::max(out.worst_lambda, sample.lambda_measured);
    else
      ++out.unresolved;

    const median::Domain dom{-data.R, data.R};
    const double eps_value = q.median_epsilon * (dom.hi - dom.lo);
    const auto features = robust::feature_values(poisoned, robust::InnerProductMode::exact);
    for (int k = 0; k < d; ++k) {
      std::vector<double> col;
      for (Eigen::Index j = 0; j < features.rows(); ++j) col.push_back(features(j, k));
      const double exact = median::ListCdf(col, dom).median();
      const auto est = median::estimate_list_median(col, dom, eps_value, q.median_delta0, rm);
      const double err = std::abs(est.value - exact);
      add_row(out.medians, root, rep.alpha, k, exact, est.value, err, eps_value, est.success_branch, est.charges);
      if (est.success_branch) {
        out.violations += err > eps_value;
        out.worst_median = std::max(out.worst_median, err / eps_value);
      }
    }
  }
  return out;
}

struct BoostTrial {
  Rows rows;
  int violations = 0, sign_checks = 0, sign_failures = 0, flips_eig = 0, flips_mean = 0;
  double worst_shift = 0.0, gamma = 0.0;
};

CVector embed_state(const RVector& x, int ambient) {
  CVector psi = CVector::Zero(ambient);
  const double n = x.norm();
  if (!(n > 0.0)) throw Error("boost", "test point is the zero vector");
  for (Eigen::Index i = 0; i < x.size(); ++i) psi(i) = x(i) / n;
  return psi;
}

BoostTrial boost_trial(const Params& p, const robust::RawDataset* file_data, const std::vector<int>* file_labels,
                       int t) {
  const std::uint64_t root = trial_seed(p, t);
  const auto& b = p.boost;
  robust::RawDataset data;
  std::vector<int> labels;
  std::vector<RVector> tests;
  if (file_data) {
    data = *file_data;
    labels = *file_labels;
    for (int i = 0; i < std::min(b.test_points, data.count()); ++i) tests.push_back(data.vectors[static_cast<size_t>(i)]);
  } else {
    Rng rng = make_rng(root, "cli-boost-data");
    const int dim = p.dataset.dim;
    auto draw = [&](int y) {
      RVector x(dim);
      for (int k = 0; k < dim; ++k) x(k) = normal(rng);
      x(0) += y * p.dataset.separation / 2.0;
      return x;
    };
    for (int i = 0; i < p.dataset.count; ++i) {
      labels.push_back(i % 2 == 0 ? 1 : -1);
      data.vectors.push_back(draw(labels.back()));
    }
    data.R = data.max_norm();
    for (int i = 0; i < b.test_points; ++i) tests.push_back(draw(i % 2 == 0 ? 1 : -1));
  }

  Rng rt = make_rng(root, "cli-boost-train");
  const auto trained = boosting::train_bootstrap_ensemble(data, labels, b.classifiers, rt);
  const auto& spec = trained.spec;
  BoostTrial out;
  out.gamma = boosting::measured_gamma(boosting::ensemble_operator(spec));
  const auto C = boosting::ensemble_operator(spec);

  std::vector<int> clean_eig, clean_mean;
  for (size_t i = 0; i < b.alphas.size(); ++i)
    for (size_t ti = 0; ti < tests.size(); ++ti) {
      const CVector psi = embed_state(tests[ti], spec.ambient_dim);
      boosting::AttackSpec a;
      a.alpha = b.alphas[i];
      a.strategy = b.strategy;
      a.target = psi;
      a.target_class = b.target_class;
      const auto rep = boosting::attack_ensemble(spec, a);
      Rng rc = make_rng(root, "cli-boost-classify", i * tests.size() + ti);
      const auto eig = boosting::classify_by_eigenspace(psi, rep.attacked, b.classify, rc);
      const auto mean = boosting::classify_by_mean(psi, rep.attacked);
      add_row(out.rows, root, static_cast<int>(ti), a.alpha, out.gamma, "eigenspace", eig.cls, eig.confidence,
              rep.norm_shift, rep.eig_shift_max);
      add_row(out.rows, root, static_cast<int>(ti), a.alpha, out.gamma, "mean", mean.cls, std::abs(mean.expectation),
              rep.norm_shift, rep.eig_shift_max);
      out.violations += rep.eig_shift_max > rep.bound + 1e-12;
      out.worst_shift = std::max(out.worst_shift, rep.bound > 0.0 ? rep.eig_shift_max / rep.bound : 0.0);
      if (a.alpha < out.gamma / 4.0) {
        ++out.sign_checks;
        const bool ok = boosting::spectral_signs_preserved(C, boosting::ensemble_operator(rep.attacked));
        out.sign_failures += !ok;
        out.violations += !ok;
      }
      if (i == 0) {
        clean_eig.push_back(eig.cls);
        clean_mean.push_back(mean.cls);
      } else {
        out.flips_eig += eig.cls != clean_eig[ti];
        out.flips_mean += mean.cls != clean_mean[ti];
      }
    }
  return out;
}

std::vector<kmeans::Participant> load_participants(const std::string& path, int& dim) {
  auto f = open_input(path);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
    break;
  }
  if (header.empty()) throw Error("kmeans", path + ": missing header");
  const bool flag = header.back() == "participates";
  dim = static_cast<int>(header.size()) - (flag ? 1 : 0);
  for (int i = 0; i < dim; ++i)
    if (header[static_cast<size_t>(i)] != "x" + std::to_string(i))
      throw Error("kmeans", path + ": header must be x0,...,x<d-1>[,participates]");
  if (dim < 1) throw Error("kmeans", path + ": no coordinate columns");

  std::vector<RVector> rows;
  std::vector<bool> part;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::vector<double> vals;
    for (std::string cell; std::getline(ss, cell, ',');) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != cell.size() || !std::isfinite(v))
        throw Error("kmeans", path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      vals.push_back(v);
    }
    if (vals.size() != header.size())
      throw Error("kmeans", path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                " cells");
    RVector x(dim);
    for (int i = 0; i < dim; ++i) x(i) = vals[static_cast<size_t>(i)];
    rows.push_back(std::move(x));
    if (flag) {
      if (vals.back() != 0.0 && vals.back() != 1.0)
        throw Error("kmeans", path + ":" + std::to_string(lineno) + ": participates must be 0 or 1");
      part.push_back(vals.back() == 1.0);
    }
  }
  if (rows.empty()) throw Error("kmeans", path + ": no participants");
  return kmeans::ingest(rows, part);
}

struct KmeansTrial {
  Rows trajectory, privacy;
  int violations = 0, rounds = 0, aborted = 0, reseeded = 0;
  double worst_error = 0.0, p_excess = 0.0, bound = 0.0;
  std::uint64_t q = 0;
  bool converged = false, exhausted = false;
};

KmeansTrial kmeans_trial(const Params& p, const KmeansParams& kp, const std::vector<kmeans::Participant>* file_ps,
                         int t) {
  const std::uint64_t root = trial_seed(p, t);
  std::vector<kmeans::Participant> generated;
  if (!file_ps) {
    Rng rng = make_rng(root, "cli-kmeans-data");
    generated = kmeans::blobs(p.dataset.centers, p.dataset.count, p.dataset.spread, rng);
  }
  const auto& ps = file_ps ? *file_ps : generated;
  const int N = static_cast<int>(ps.size());
  const auto& cfg = kp.protocol;

  std::vector<RVector> init = kp.init;
  if (init.empty())
    for (int j = 0; j < cfg.k; ++j) init.push_back(ps[static_cast<size_t>(static_cast<long long>(j) * N / cfg.k)].x);

  Rng rng = make_rng(root, "cli-kmeans-protocol");
  const auto res = kmeans::run_protocol(ps, cfg, init, rng, kmeans::ChannelAttack{kp.channel_attack});

  KmeansTrial out;
  out.converged = res.converged;
  out.exhausted = res.budget_exhausted;
  for (size_t rd = 0; rd < res.rounds.size(); ++rd) {
    const auto& round = res.rounds[rd];
    if (round.aborted) {
      ++out.aborted;
      continue;
    }
    ++out.rounds;
    for (int c = 0; c < cfg.k; ++c)
      for (int i = 0; i < cfg.d; ++i) {
        const double e = round.centroids[static_cast<size_t>(c)](i), x = round.exact.centroids[static_cast<size_t>(c)](i);
        const double err = std::abs(e - x);
        add_row(out.trajectory, root, static_cast<int>(rd) + 1, c, i, e, x, err);
        // A reseeded centroid is placed, not estimated.
        if (round.reseeded[static_cast<size_t>(c)]) continue;
        out.worst_error = std::max(out.worst_error, err / cfg.epsilon);
        if (!kp.channel_attack) out.violations += err > cfg.epsilon;
      }
    for (bool r : round.reseeded) out.reseeded += r;
  }
  const auto priv = kmeans::privacy_analysis(res.budget, N);
  const std::string exact = priv.exact_computed ? csv::format(priv.p_opt_exact) : "";
  add_row(out.privacy, root, res.budget.q1, res.budget.q2, N, exact, priv.p_opt_closed_form, priv.bound);
  out.q = priv.q_total;
  out.p_excess = priv.p_opt_closed_form - 0.5;
  out.bound = priv.bound;
  out.violations += out.p_excess > priv.bound;
  if (priv.exact_computed) out.violations += priv.p_opt_exact > priv.p_opt_closed_form + 1e-9;
  return out;
}

csv::Table make_table(const std::string& name, std::vector<std::string> cols, const std::vector<std::string>& echo) {
  csv::Table t(name, std::move(cols));
  t.comments = echo;
  return t;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "qpca") return Command::qpca;
  if (name == "boost") return Command::boost;
  if (name == "kmeans") return Command::kmeans;
  if (name == "verify") return Command::verify;
  bad("unknown subcommand '" + name + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::qpca:
      return "qpca";
    case Command::boost:
      return "boost";
    case Command::kmeans:
      return "kmeans";
    case Command::verify:
      return "verify";
  }
  return "";
}

Config parse_config(const std::string& text, Command command) {
  json user = json::object();
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      bad(std::string("invalid JSON: ") + e.what());
    }
  }
  const json merged = merge(defaults(command), user, "");
  const Params p = read_params(merged, command);
  Config c;
  c.command = command;
  c.json = merged.dump();
  c.seed = p.seed;
  c.trials = p.trials;
  c.output = p.output;
  return c;
}

Config load_config(const std::string& path, Command command) {
  auto f = open_input(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), command);
}

Config with_overrides(const Config& cfg, std::optional<std::uint64_t> seed, std::optional<std::string> output) {
  json j = json::parse(cfg.json);
  if (seed) j["seed"] = *seed;
  if (output) j["output"] = *output;
  return parse_config(j.dump(), cfg.command);
}

std::string default_config(Command command) { return defaults(command).dump(2); }

Outcome run(const Config& cfg, int workers, std::ostream& log) {
  const json merged = json::parse(cfg.json);
  const Params p = read_params(merged, cfg.command);
  std::vector<std::string> echo{"command=" + command_name(cfg.command)};
  flatten(merged, "", echo);

  Outcome out;
  auto emit = [&](const csv::Table& t) { out.files.push_back(t.write_to(p.output)); };

  switch (cfg.command) {
    case Command::qpca: {
      std::unique_ptr<robust::RawDataset> file;
      if (!p.dataset.synthetic) {
        file = std::make_unique<robust::RawDataset>(load_raw(p.dataset.path));
      }
      const auto trials = parallel_trials<QpcaTrial>(p.trials, workers, [&](int t) {
        return qpca_trial(p, file.get(), t);
      });
      auto main = make_table("qpca", {"seed", "alpha", "L", "d", "norm", "bound", "Lambda_measured", "queries"}, echo);
      auto med = make_table("qpca_medians",
                            {"seed", "alpha", "feature", "exact", "estimate", "error", "epsilon", "success_branch",
                             "charges"},
                            echo);
      QpcaTrial agg;
      for (const auto& t : trials) {
        main.rows.insert(main.rows.end(), t.rows.begin(), t.rows.end());
        med.rows.insert(med.rows.end(), t.medians.begin(), t.medians.end());
        agg.violations += t.violations;
        agg.worst_ratio = std::max(agg.worst_ratio, t.worst_ratio);
        agg.worst_lambda = std::max(agg.worst_lambda, t.worst_lambda);
        agg.unresolved += t.unresolved;
        agg.worst_median = std::max(agg.worst_median, t.worst_median);
      }
      emit(main);
      emit(med);
      out.violations = agg.violations;
      out.summary.push_back("poisoning: max ||M - M'|| / (5 alpha L (d + 2)) = " + fmt(agg.worst_ratio) + " over " +
                            std::to_string(main.rows.size()) + " rows (bound: <= 1)");
      out.summary.push_back("sampling: max Lambda_measured = " + fmt(agg.worst_lambda) + " over resolved spectra; " +
                            std::to_string(agg.unresolved) + " row(s) with gaps below the phase resolution");
      out.summary.push_back("feature medians: max error / epsilon = " + fmt(agg.worst_median) + " (bound: <= 1)");
      break;
    }
    case Command::boost: {
      std::unique_ptr<robust::RawDataset> file;
      std::vector<int> labels;
      if (!p.dataset.synthetic) {
        file = std::make_unique<robust::RawDataset>(load_raw(p.dataset.path));
        auto f = open_input(p.dataset.labels_path);
        for (std::string line; std::getline(f, line);) {
          if (line.empty() || line[0] == '#') continue;
          if (line != "1" && line != "-1" && line != "+1") throw Error("boost", "labels must be +1 or -1, got '" + line + "'");
          labels.push_back(line == "-1" ? -1 : 1);
        }
      }
      const auto trials = parallel_trials<BoostTrial>(p.trials, workers, [&](int t) {
        return boost_trial(p, file.get(), file ? &labels : nullptr, t);
      });
      auto main = make_table(
          "boost", {"seed", "test", "alpha", "gamma", "method", "class", "confidence", "norm_shift", "eig_shift_max"},
          echo);
      BoostTrial agg;
      double min_gamma = INFINITY;
      for (const auto& t : trials) {
        main.rows.insert(main.rows.end(), t.rows.begin(), t.rows.end());
        agg.violations += t.violations;
        agg.sign_checks += t.sign_checks;
        agg.sign_failures += t.sign_failures;
        agg.flips_eig += t.flips_eig;
        agg.flips_mean += t.flips_mean;
        agg.worst_shift = std::max(agg.worst_shift, t.worst_shift);
        min_gamma = std::min(min_gamma, t.gamma);
      }
      emit(main);
      out.violations = agg.violations;
      out.summary.push_back("attack: max eigenvalue shift / (2 alpha) = " + fmt(agg.worst_shift) + " (bound: <= 1)");
      out.summary.push_back("signs preserved for alpha < gamma/4: " +
                            std::to_string(agg.sign_checks - agg.sign_failures) + "/" +
                            std::to_string(agg.sign_checks) + " (smallest gamma " + fmt(min_gamma) + ")");
      out.summary.push_back("class changes vs first alpha: eigenspace " + std::to_string(agg.flips_eig) + ", mean " +
                            std::to_string(agg.flips_mean));
      break;
    }
    case Command::kmeans: {
      KmeansParams kp = p.kmeans;
      std::unique_ptr<std::vector<kmeans::Participant>> file;
      if (!p.dataset.synthetic) {
        int dim = 0;
        file = std::make_unique<std::vector<kmeans::Participant>>(load_participants(p.dataset.path, dim));
        kp.protocol.d = dim;
        for (const auto& c : kp.init)
          if (c.size() != dim) bad("kmeans.init: dimension differs from the data");
        const int N = static_cast<int>(file->size());
        kp.protocol.privacy_delta = effective_privacy_delta(kp.user_privacy_delta, N);
        check_budget(kp, N);
      }
      const auto planned = kmeans::rotation_budget(kp.protocol, kp.protocol.max_rounds, kp.planning_min_fraction);
      const auto trials = parallel_trials<KmeansTrial>(p.trials, workers, [&](int t) {
        return kmeans_trial(p, kp, file.get(), t);
      });
      auto traj = make_table("kmeans_trajectory",
                             {"seed", "round", "cluster", "component", "estimate", "exact", "error"}, echo);
      auto priv = make_table("kmeans_privacy", {"seed", "q1", "q2", "N", "p_opt_exact", "p_opt_closed", "bound"}, echo);
      KmeansTrial agg;
      int converged = 0, exhausted = 0;
      for (const auto& t : trials) {
        traj.rows.insert(traj.rows.end(), t.trajectory.begin(), t.trajectory.end());
        priv.rows.insert(priv.rows.end(), t.privacy.begin(), t.privacy.end());
        agg.violations += t.violations;
        agg.rounds += t.rounds;
        agg.aborted += t.aborted;
        agg.reseeded += t.reseeded;
        agg.worst_error = std::max(agg.worst_error, t.worst_error);
        agg.p_excess = std::max(agg.p_excess, t.p_excess);
        agg.bound = std::max(agg.bound, t.bound);
        agg.q = std::max(agg.q, t.q);
        converged += t.converged;
        exhausted += t.exhausted;
      }
      emit(traj);
      emit(priv);
      out.violations = agg.violations;
      out.summary.push_back("planned rotations per participant q1 + q2 = " + std::to_string(planned.total()) +
                            " (min cluster fraction " + fmt(kp.planning_min_fraction) + ")");
      out.summary.push_back("rounds: " + std::to_string(agg.rounds) + " completed, " + std::to_string(agg.aborted) +
                            " aborted, " + std::to_string(agg.reseeded) + " cluster reseed(s); converged " + std::to_string(converged) + "/" + std::to_string(p.trials) +
                            ", privacy budget exhausted " + std::to_string(exhausted));
      out.summary.push_back("centroid error (estimated clusters): max |estimate - exact| / epsilon = " + fmt(agg.worst_error) +
                            (kp.channel_attack ? " (channel attacked; not asserted)" : " (bound: <= 1)"));
      out.summary.push_back("privacy: max q = " + std::to_string(agg.q) + ", P_opt - 1/2 = " + fmt(agg.p_excess) +
                            " vs q/2N = " + fmt(agg.bound));
      break;
    }
    case Command::verify: {
      acceptance::SuiteOptions opts;
      opts.seed = p.seed;
      opts.out_dir = p.output;
      opts.workers = workers;
      opts.only = p.criteria;
      const auto results = acceptance::run_suite(opts, log);
      out.violations = acceptance::hard_failures(results);
      out.files.push_back((std::filesystem::path(p.output) / "summary.csv").string());
      return out;
    }
  }

  std::ofstream s(std::filesystem::path(p.output) / "summary.txt");
  for (const auto& line : out.summary) {
    log << line << '\n';
    s << line << '\n';
  }
  const std::string verdict = out.violations == 0 ? "all asserted bounds hold"
                                                  : std::to_string(out.violations) + " asserted bound(s) violated";
  log << verdict << '\n';
  s << verdict << '\n';
  out.files.push_back((std::filesystem::path(p.output) / "summary.txt").string());
  return out;
}

}  // namespace aqml::experiment
