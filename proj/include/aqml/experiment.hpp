#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aqml::experiment {

enum class Command { qpca, boost, kmeans, verify };

Command parse_command(const std::string& name);
std::string command_name(Command c);

/// Effective configuration: the user's JSON merged over the defaults of one
/// subcommand. `json` is the merged document (keys sorted), echoed into every
/// CSV header.
struct Config {
  Command command = Command::qpca;
  std::string json;
  std::uint64_t seed = 1;
  int trials = 1;
  std::string output;
};

/// Unknown keys, wrong types and inadmissible parameters throw
/// Error("config", ...) before anything is simulated. Empty text: defaults.
Config parse_config(const std::string& text, Command command);
Config load_config(const std::string& path, Command command);
/// Command-line overrides; revalidates.
Config with_overrides(const Config& cfg, std::optional<std::uint64_t> seed, std::optional<std::string> output);
/// Defaults as indented JSON.
std::string default_config(Command command);

struct Outcome {
  int violations = 0;  // asserted bounds that failed
  std::vector<std::string> files;
  std::vector<std::string> summary;
};

/// Trials run on `workers` threads; output is independent of the count.
Outcome run(const Config& cfg, int workers, std::ostream& log);

}  // namespace aqml::experiment
