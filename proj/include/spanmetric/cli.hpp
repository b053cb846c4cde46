#pragma once

// Command-line front end. `run` is the whole program minus process setup so
// tests can drive it in-process.

#include <ostream>
#include <string>
#include <vector>

namespace spanmetric::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigFailure = 1,  // bad flags values, missing pools, unreadable files
  kParseFailure = 2,   // malformed input record or command line
  kModeUnsatisfiable = 3,
  kSupervisionMismatch = 4,
  kAlignmentFailure = 5,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spanmetric::cli
