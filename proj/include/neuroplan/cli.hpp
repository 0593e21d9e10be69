#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace neuroplan {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPlanFailed = 1;
inline constexpr int kExitUsage = 2;

/// Command-line front end. `args` excludes the program name.
/// Returns 0 on success, 1 when a planner finds no path, 2 on usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace neuroplan
