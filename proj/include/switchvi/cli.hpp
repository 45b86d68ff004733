#pragma once

#include <iosfwd>

namespace switchvi {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitFailed = 1,       // assumption or property failure
    kExitNotConverged = 2, // solver gave up
    kExitInput = 3,        // I/O, parse or usage error
};

/// Entry point of the switchvi command line: validate | solve | verify.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace switchvi
