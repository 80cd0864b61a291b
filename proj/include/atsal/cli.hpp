#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace atsal {

inline constexpr int exit_ok = 0;
inline constexpr int exit_internal = 1;
inline constexpr int exit_usage = 2;

// Runs the command line front end. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace atsal
