#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace softseg::cli {

// Exit codes: 0 success, 1 runtime or IO failure, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one subcommand; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "start:stop:step" (both ends inclusive) or a comma separated list.
std::vector<double> parse_thresholds(const std::string& text);

// SOFTSEG_THREADS when set and positive, otherwise the hardware concurrency.
unsigned evaluation_threads();

}  // namespace softseg::cli
