#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qpsa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `qpsa` invocation. `args[0]` is the program name. Subcommands:
/// make-dataset, train, eval, generate, classify, compare.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace qpsa::cli
