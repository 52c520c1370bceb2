#pragma once

#include <span>
#include <string>

namespace ebmlab::cli {

/// Exit codes: 0 success, 1 check failure (gradcheck), 2 configuration or
/// usage error, 3 runtime error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// Parses argv and dispatches to the subcommands (train, eval, ood, plot,
/// gradcheck, experiment, compare). Never throws; errors become categorized
/// messages on stderr and a nonzero exit status.
int run(int argc, const char* const* argv);

/// Convenience for tests.
int run(std::span<const std::string> args);

}  // namespace ebmlab::cli
