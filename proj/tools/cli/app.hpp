#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace csl::cli {

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitInternal = 4;

/**
 * Runs one command line (without the program name). The ResultJson goes
 * to `out`; failures go to `err` as {"error": {...}}.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csl::cli
