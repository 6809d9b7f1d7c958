#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blfem {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInvalidInput = 2, kExitNumericalFailure = 3 };

/// Entry point of the `blfem` tool: subcommands mesh, solve, converge,
/// corrector, rates. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blfem
