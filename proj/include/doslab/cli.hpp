#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace doslab::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kDomain = 3,
  kSolver = 4,
  kStarvation = 5,
  kIo = 6,
};

/// Runs one command line (args excludes the program name). Results go to
/// `out` unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace doslab::cli
