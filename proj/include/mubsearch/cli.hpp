#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mub::cli {

/// Exit statuses of run_cli.
enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kInvalidUsage = 2,
  kVerifyFailed = 3,
};

/// Runs one command line (without the program name). Results go to `out`
/// or to the files named by --out; diagnostics and usage text go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mub::cli
