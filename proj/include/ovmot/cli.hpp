#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ovmot {

/// Exit codes: 0 success, 1 runtime failure (I/O, parse, config), 2 usage
/// error, 3 scorer unavailable, 4 parity check over tolerance.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitScorerUnavailable = 3;
inline constexpr int kExitParityMismatch = 4;

/// Entry point behind the `ovmot` tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Reads a flat `key = value` file ('#' starts a comment) into
/// `--key value` pairs. Throws ConfigError on a malformed line.
std::vector<std::string> config_file_args(const std::string& path);

} // namespace ovmot
