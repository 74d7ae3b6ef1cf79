#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fkhom::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumerical = 3, kPartial = 4 };

/// Parses `args` (args[0] is the program name) and runs one subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fkhom::cli
