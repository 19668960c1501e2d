#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace advaug::cli {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< runtime, data or format error; failed check
inline constexpr int kExitUsage = 2;    ///< bad flags or configuration values

/// Runs one subcommand. `args` excludes the program name:
/// {"train", "--mode", "a3t", ...}. Subcommands: train, eval, attack,
/// gradcheck. Every subcommand also reads a flat key=value file given by
/// --config; explicit flags take precedence over file entries.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advaug::cli
