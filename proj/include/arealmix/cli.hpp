#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace arealmix {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitNotConverged = 3,  // some R-hat above kRhatThreshold; outputs still written
  kExitSamplerFailure = 4,
};

inline constexpr double kRhatThreshold = 1.05;

/// Runs the command line `args` (program name first). Normal output goes to
/// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arealmix
