#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specdec::cli {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitMismatch = 2;

/// Runs one command line (without the program name). CSV goes to `out`
/// unless --out names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specdec::cli
