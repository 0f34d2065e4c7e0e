#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "picce/commands.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common_options(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config_path, "TOML config file")->check(CLI::ExistingFile);
  sub->add_option("-o,--out", o.out_dir, "output directory (overrides out_dir)");
  sub->add_option("-s,--seed", o.seed, "master seed (overrides seed)");
  sub->add_option("-j,--jobs", o.jobs, "worker threads (overrides jobs)");
}

picce::RunConfig resolve(const std::string& command, const Overrides& o) {
  auto config = o.config_path.empty() ? picce::parse_run_config("", ".")
                                      : picce::load_run_config(o.config_path);
  if (!config.command.empty() && config.command != command) {
    throw picce::ConfigError("key 'command': config is for '" + config.command + "', not '" +
                             command + "'");
  }
  config.command = command;
  if (!o.out_dir.empty()) config.out_dir = o.out_dir;
  if (o.seed) config.seed = *o.seed;
  if (o.jobs) {
    if (*o.jobs == 0) throw picce::ConfigError("--jobs must be at least 1");
    config.jobs = *o.jobs;
  }
  config.sweep.seed = config.seed;
  config.sweep.jobs = config.jobs;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-defer surrogate verification and expert-count sweeps"};
  app.require_subcommand(1);
  Overrides overrides;
  auto* risks = app.add_subcommand("verify-risks", "closed-form vs Monte-Carlo conditional risks");
  auto* consistency =
      app.add_subcommand("verify-consistency", "optimum recovery and Bayes-decision matching");
  auto* sweep = app.add_subcommand("sweep", "train scorers across expert counts");
  for (auto* sub : {risks, consistency, sweep}) add_common_options(sub, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? picce::kExitOk : picce::kExitUsage;
  }

  try {
    const std::string command = app.get_subcommands().front()->get_name();
    const auto config = resolve(command, overrides);
    std::cout << "# effective config\n" << picce::echo_run_config(config) << std::flush;
    if (command == "verify-risks") return picce::cmd_verify_risks(config, std::cout);
    if (command == "verify-consistency") return picce::cmd_verify_consistency(config, std::cout);
    return picce::cmd_sweep(config, std::cout);
  } catch (const picce::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return picce::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return picce::kExitCheckFailed;
  }
}
