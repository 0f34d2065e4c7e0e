#pragma once

// Flat key = value run configuration (a TOML subset: integers, floats,
// booleans, quoted strings and one-level arrays; '#' starts a comment).

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "picce/experts.hpp"
#include "picce/optim.hpp"
#include "picce/trainer.hpp"

namespace picce {

/// Bad config content or arguments; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw parse: key -> value text (strings unquoted, arrays kept bracketed).
std::map<std::string, std::string> parse_flat_config(const std::string& text);

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::size_t jobs = 1;

  // verify-risks / verify-consistency
  std::vector<std::filesystem::path> fixtures;
  std::size_t random_points = 50;
  std::size_t identity_points = 500;
  std::size_t mc_samples = 100000;
  std::size_t max_experts = 8;
  OptimizerConfig optimizer;

  SweepConfig sweep;
};

/// Parses `text`; relative fixture paths resolve against `base_dir`.
/// Throws ConfigError naming the offending key.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its effective value, in a form parse_run_config accepts.
std::string echo_run_config(const RunConfig& config);

}  // namespace picce
