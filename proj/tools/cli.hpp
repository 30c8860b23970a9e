#pragma once

#include <iosfwd>

namespace heatalloc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitComputation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line. Diagnostics go to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace heatalloc::cli
