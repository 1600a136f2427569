#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace affpcl {

enum ExitCode : int { kExitOk = 0, kExitValidationFailed = 1, kExitConfigError = 2, kExitRuntimeError = 3 };

// Parses `args` (without the program name) and runs one subcommand.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace affpcl
