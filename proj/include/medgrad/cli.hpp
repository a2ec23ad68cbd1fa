#pragma once

#include <string>
#include <vector>

namespace medgrad {

// Full command-line surface (gen-data, train, eval, explain, compare,
// inspect-checkpoint). Returns the process exit code: 0 on success, 1 on
// runtime errors, CLI11's codes for usage errors.
int run_cli(std::vector<std::string> args);

}  // namespace medgrad
