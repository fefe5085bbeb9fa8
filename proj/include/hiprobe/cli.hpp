#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hiprobe::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,         // unreadable/malformed input, bad usage
  kPreconditionError = 3,  // data cannot support the computation
  kInternalError = 4,
};

/// Runs one command line. `args` excludes the program name. JSON goes to `out`
/// when no --out path is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hiprobe::cli
