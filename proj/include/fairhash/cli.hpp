#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fairhash {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitPrecondition = 4;

// Runs the tool on `args` (without the program name). Data goes to `out`,
// diagnostics to `err`; `in` backs probe input read from "-".
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace fairhash
