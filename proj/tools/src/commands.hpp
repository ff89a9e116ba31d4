#pragma once

#include <iosfwd>

#include "config.hpp"

namespace crgate::cli {

/// Exit codes shared by all commands.
enum ExitCode : int { kSuccess = 0, kError = 1, kNotConverged = 2 };

/// Runs the (multistart) optimization and writes result.json, pulse.csv,
/// spectrum.csv, manifest.json and run.log into the output directory.
int cmd_optimize(const RunConfig& cfg, std::ostream& console);

/// Runs the selected sweep and writes <selector>.csv, manifest.json and run.log.
int cmd_sweep(const RunConfig& cfg, std::ostream& console);

}  // namespace crgate::cli
