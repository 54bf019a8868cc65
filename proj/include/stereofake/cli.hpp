#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stereofake {

enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitInvalidArgs = 2,
  kExitFakeDetected = 3,
  kExitNonConvergence = 4,
};

// Entry point of the `stereofake` tool. Data goes to `out`, logs to `err`.
// A "--config FILE" argument overlays flat key=value settings onto the
// chosen subcommand; explicit flags win over the file, unknown keys fail.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace stereofake
