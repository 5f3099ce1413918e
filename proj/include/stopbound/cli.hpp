#pragma once

#include <iosfwd>

namespace stopbound::cli {

enum ExitCode : int {
    Success = 0,
    UsageError = 1,
    NotConverged = 2,
    VerificationFailed = 3,
};

/// Entry point of the stopbound tool. Subcommands: constants, solve, bounds,
/// verify, oracle, residuals. Normal output goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace stopbound::cli
