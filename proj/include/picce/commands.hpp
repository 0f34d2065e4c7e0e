#pragma once

#include <iosfwd>

#include "picce/config.hpp"

namespace picce {

/// Exit codes shared by all commands.
enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

/// Closed-form vs Monte-Carlo risks and the prefix-weight telescoping
/// identity. Writes risks.csv and identity.csv.
int cmd_verify_risks(const RunConfig& config, std::ostream& log);

/// PiCCE optimum recovery, Bayes matching and the information-advantage condition over fixtures and
/// random points. Writes consistency.csv, condition1.csv and theorem2a.csv.
int cmd_verify_consistency(const RunConfig& config, std::ostream& log);

/// Expert-count sweep. Writes sweep.csv, loss_curves.csv and summary.csv.
int cmd_sweep(const RunConfig& config, std::ostream& log);

/// Creates the output directory and writes effective_config.toml. Throws
/// ConfigError when the directory cannot be created or written.
void prepare_output_dir(const RunConfig& config);

}  // namespace picce
