#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "aqml/csv.hpp"
#include "aqml/error.hpp"
#include "aqml/experiment.hpp"

namespace fs = std::filesystem;
using namespace aqml::experiment;

namespace {

std::string config_error(const std::string& text, Command c) {
  try {
    parse_config(text, c);
  } catch (const aqml::Error& e) {
    return std::string(e.module()) + "|" + e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("aqml_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("unknown keys and bad types are rejected by path") {
  CHECK(config_error(R"({"qpca": {"gama": 0.1}})", Command::qpca).find("unknown key 'qpca.gama'") != std::string::npos);
  CHECK(config_error(R"({"boost": {}})", Command::qpca).find("unknown key 'boost'") != std::string::npos);
  CHECK(config_error(R"({"qpca": {"bits": "12"}})", Command::qpca).find("qpca.bits: expected an integer") !=
        std::string::npos);
  CHECK(config_error(R"({"qpca": {"sim": "magic"}})", Command::qpca).find("not one of") != std::string::npos);
  CHECK(config_error(R"({"subcommand": "boost"})", Command::qpca).find("not 'qpca'") != std::string::npos);
  CHECK(config_error("{not json", Command::qpca).find("invalid JSON") != std::string::npos);
  CHECK(config_error(R"({"dataset": {"source": "file"}})", Command::qpca).find("dataset.path") != std::string::npos);
  CHECK(config_error(R"({"verify": {"criteria": [15]}})", Command::verify).find("verify.criteria") !=
        std::string::npos);
  CHECK(config_error("{}", Command::qpca).empty());
  CHECK(config_error("", Command::boost).empty());
}

TEST_CASE("median epsilon 0.3 is rejected before simulation") {
  const auto msg = config_error(R"({"qpca": {"median": {"epsilon": 0.3}}})", Command::qpca);
  CHECK(msg.rfind("config|", 0) == 0);
  CHECK(msg.find("epsilon < 1/4 required") != std::string::npos);
  CHECK(config_error(R"({"qpca": {"median": {"epsilon": 0.2}}})", Command::qpca).empty());
}

TEST_CASE("alpha L above 1 is rejected") {
  CHECK(config_error(R"({"dataset": {"family": "cubic"}, "qpca": {"alphas": [0.3]}})", Command::qpca)
            .find("alpha L <= 1") != std::string::npos);
  CHECK(config_error(R"({"dataset": {"family": "cubic"}, "qpca": {"alphas": [0.25]}})", Command::qpca).empty());
  CHECK(config_error(R"({"qpca": {"alphas": [0.5]}})", Command::qpca).find("[0, 1/2)") != std::string::npos);
}

TEST_CASE("kmeans budget at or above the population is rejected") {
  const auto msg = config_error(R"({"dataset": {"count": 10000}})", Command::kmeans);
  CHECK(msg.rfind("kmeans|", 0) == 0);
  CHECK(msg.find(">= N = 10000") != std::string::npos);
  CHECK(config_error(R"({"kmeans": {"planning_min_fraction": 0.05}})", Command::kmeans).find("(epsilon, 1]") !=
        std::string::npos);
  CHECK(config_error(R"({"kmeans": {"init": [[0, 0]]}})", Command::kmeans).find("exactly k") != std::string::npos);
}

TEST_CASE("defaults are filled in and echoed") {
  const auto cfg = parse_config(R"({"trials": 2})", Command::qpca);
  CHECK(cfg.trials == 2);
  CHECK(cfg.seed == 1);
  CHECK(cfg.json.find("\"gamma\":0.05") != std::string::npos);
  const auto over = with_overrides(cfg, 7, std::string("elsewhere"));
  CHECK(over.seed == 7);
  CHECK(over.output == "elsewhere");
  CHECK(over.trials == 2);
}

TEST_CASE("qpca run is byte-reproducible and independent of worker count") {
  const auto a = scratch("qa"), b = scratch("qb");
  const std::string base = R"({"trials": 3, "dataset": {"count": 80}, "qpca": {"alphas": [0.1, 0.4], "shots": 2000}, "output": ")";
  const auto ca = parse_config(base + a.string() + "\"}", Command::qpca);
  std::ostringstream log;
  const auto ra = run(ca, 1, log);
  const auto rb = run(with_overrides(ca, std::nullopt, b.string()), 3, log);
  CHECK(ra.violations == 0);
  CHECK(rb.violations == 0);
  for (const char* f : {"qpca.csv", "qpca_medians.csv"}) {
    auto ta = slurp(a / f), tb = slurp(b / f);
    CHECK(ta.rfind(aqml::csv::kSchemaLine, 0) == 0);
    CHECK(ta.find("# qpca.median.epsilon=0.05") != std::string::npos);
    const auto pos = tb.find(b.string());
    REQUIRE(pos != std::string::npos);
    tb.replace(pos, b.string().size(), a.string());
    CHECK(ta == tb);
  }
  CHECK(slurp(a / "qpca.csv").find("seed,alpha,L,d,norm,bound,Lambda_measured,queries\n") != std::string::npos);
}

TEST_CASE("boost and kmeans runs write their tables") {
  std::ostringstream log;
  const auto b = scratch("boost");
  const auto rb = run(parse_config(R"({"trials": 2, "output": ")" + b.string() + "\"}", Command::boost), 2, log);
  CHECK(rb.violations == 0);
  CHECK(slurp(b / "boost.csv").find("seed,test,alpha,gamma,method,class,confidence,norm_shift,eig_shift_max\n") !=
        std::string::npos);

  const auto k = scratch("kmeans");
  const auto rk = run(parse_config(R"({"dataset": {"count": 200000}, "kmeans": {"epsilon": 0.2, "max_rounds": 2},
                                      "output": ")" + k.string() + "\"}",
                                   Command::kmeans),
                      1, log);
  CHECK(rk.violations == 0);
  const auto priv = slurp(k / "kmeans_privacy.csv");
  CHECK(priv.find("seed,q1,q2,N,p_opt_exact,p_opt_closed,bound\n") != std::string::npos);
  CHECK(slurp(k / "kmeans_trajectory.csv").find("seed,round,cluster,component,estimate,exact,error\n") !=
        std::string::npos);
}

TEST_CASE("participant file input and its errors") {
  const auto dir = scratch("pfile");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.csv");
    f << "a,b\n0.1,0.2\n";
  }
  std::ostringstream log;
  auto cfg = parse_config(R"({"dataset": {"source": "file", "path": ")" + (dir / "bad.csv").string() +
                              R"("}, "output": ")" + (dir / "out").string() + "\"}",
                          Command::kmeans);
  CHECK_THROWS_WITH_AS(run(cfg, 1, log), doctest::Contains("header must be"), aqml::Error);

  {
    std::ofstream f(dir / "small.csv");
    f << "x0,x1,participates\n";
    for (int i = 0; i < 50; ++i) f << (i % 2 ? 0.5 : -0.5) << "," << 0.1 << "," << 1 << "\n";
  }
  cfg = parse_config(R"({"dataset": {"source": "file", "path": ")" + (dir / "small.csv").string() +
                         R"("}, "output": ")" + (dir / "out").string() + "\"}",
                     Command::kmeans);
  CHECK_THROWS_WITH_AS(run(cfg, 1, log), doctest::Contains("privacy requires q1 + q2 < N"), aqml::Error);
}
