#pragma once

#include <iosfwd>

namespace falab {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitVerifyFailed = 2,
    kExitIo = 3,
};

/// Entry point of the fa-lab command line. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace falab
