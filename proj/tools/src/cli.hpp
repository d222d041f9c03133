#pragma once

// Command-line front end: generate, solve, sweep, compare.

#include <iosfwd>
#include <string>
#include <vector>

namespace vlsplit::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalidInput = 2, kNotConverged = 3 };

/// Environment variable holding the default worker count.
inline constexpr const char* kThreadsEnv = "VLSPLIT_THREADS";

/// Parses and runs one command line; never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vlsplit::cli
