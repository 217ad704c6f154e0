#ifndef MTRANK_TOOLS_COMMANDS_HPP
#define MTRANK_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace mtrank::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtrank::cli

#endif  // MTRANK_TOOLS_COMMANDS_HPP
