#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace glpge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (argv[0] is the program name). Returns 0 on success,
/// 2 on usage errors (message and usage on `err`) and 1 on runtime errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace glpge
