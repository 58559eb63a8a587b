#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tickwarp::cli {

/// Exit codes: 0 success, 1 module error, 2 usage error, 3 validation checks
/// failed.
inline constexpr int kExitModuleError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitChecksFailed = 3;

/// Runs the tool with args (without the program name). Tables written to
/// "-" go to `out`; summaries and diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tickwarp::cli
