#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlrel::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kFormat = 3,
  kCapacity = 4,
  kContract = 5,
};

/// Runs one command line (without the program name) and returns its exit
/// status. Messages go to `out` and `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlrel::cli
