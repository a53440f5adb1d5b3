#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace radloc::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kParseError = 2,
  kSchemaError = 3,
  kOrderingError = 4,
};

/// Runs the command line `args` (without the program name). Human-readable
/// output goes to `out`, diagnostics to `err`; files go to the --out directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace radloc::cli
