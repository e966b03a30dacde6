// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace poolnet {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitData = 3,
  kExitCheckFailed = 4,
};

/// Entry point for the `poolnet` binary: synth, train, eval-loo, predict, gradcheck.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience for tests: argv[0] is supplied.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace poolnet
