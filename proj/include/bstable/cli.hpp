#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bstable::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitStatisticalFail = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitConfigError = 4;

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bstable::cli
