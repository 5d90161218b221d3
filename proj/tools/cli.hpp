#pragma once

#include <string>
#include <vector>

namespace anchorlab::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerification = 4;

/// Runs one invocation; args excludes the program name. Messages go to
/// stdout / stderr, results to files under --out.
int run(const std::vector<std::string>& args);

/// Comma-separated reals; "inf" is accepted.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace anchorlab::cli
