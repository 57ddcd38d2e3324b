#pragma once

#include <iosfwd>

#include "cli/config.hpp"

namespace covtest::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitPrecondition = 3,
  kExitIo = 4,
};

// Runs one command. Results go to rc.out when set, otherwise to `out`.
// Failures are reported on `err` as a single "error: code=..." line.
int run(const RunConfig& rc, std::ostream& out, std::ostream& err);

// Parses flags, loads the config and calls run().
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace covtest::cli
