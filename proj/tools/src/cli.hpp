#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace distopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNotConverged = 3;

/// Runs the command line `args` (without the program name), writing
/// human-readable output to `out` and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace distopt::cli
