#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sphgrad::cli {

/// Exit codes of the sphgrad tool.
enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNotConverged = 3,
  kSolverFailure = 4,
  kCheckViolation = 5,
};

/// Runs the tool on args (without the program name), writing human output
/// to out and diagnostics to err. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sphgrad::cli
