#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace movingout::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitDivergence = 4;

/// Runs the command line tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "1-4,7,9" into a sorted, de-duplicated list. Throws Usage.
std::vector<int> parse_id_list(const std::string& text);

}  // namespace movingout::cli
