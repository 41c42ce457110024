// Acceptance driver: one PASS/FAIL line per criterion, CSV artifacts under
// --out. Exit status is nonzero on any failure without a known-failure note.
#include <iostream>

#include "CLI11.hpp"

#include "aqml/acceptance.hpp"
#include "aqml/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  aqml::acceptance::SuiteOptions opts;
  app.add_option("--out", opts.out_dir, "artifact directory");
  app.add_option("--seed", opts.seed, "root seed");
  app.add_option("--only", opts.only, "criterion ids to run (14 reruns the others)");
  CLI11_PARSE(app, argc, argv);
  try {
    opts.workers = aqml::acceptance::workers_from_env();
    const auto results = aqml::acceptance::run_suite(opts, std::cout);
    return aqml::acceptance::hard_failures(results) == 0 ? 0 : 1;
  } catch (const aqml::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
