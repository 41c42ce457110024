// aqml <qpca|boost|kmeans|verify> [--config file.json] [--seed N] [--out dir]
//
// Exit status: 0 when every asserted bound holds, 1 on a violated bound,
// 2 on a configuration or runtime error.
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "aqml/acceptance.hpp"
#include "aqml/error.hpp"
#include "aqml/experiment.hpp"

namespace ex = aqml::experiment;

int main(int argc, char** argv) {
  CLI::App app{"robust and private quantum learning experiments"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    bool print_defaults = false;
  };
  Args args;
  for (const char* name : {"qpca", "boost", "kmeans", "verify"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config, "JSON config; omitted keys take defaults");
    sub->add_option("--seed", args.seed, "root seed (overrides the config)");
    sub->add_option("--out", args.out, "output directory (overrides the config)");
    sub->add_flag("--print-defaults", args.print_defaults, "print the default config and exit");
  }
  CLI11_PARSE(app, argc, argv);

  const auto command = ex::parse_command(app.get_subcommands().front()->get_name());
  if (args.print_defaults) {
    std::cout << ex::default_config(command) << '\n';
    return 0;
  }
  try {
    auto cfg = args.config.empty() ? ex::parse_config("", command) : ex::load_config(args.config, command);
    cfg = ex::with_overrides(cfg, args.seed, args.out);
    const int workers = aqml::acceptance::workers_from_env();
    const auto outcome = ex::run(cfg, workers, std::cout);
    for (const auto& f : outcome.files) std::cout << "wrote " << f << '\n';
    return outcome.violations == 0 ? 0 : 1;
  } catch (const std::exception& e) {  // aqml::Error messages lead with the module
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
