#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latentflow {

/// Entry point of the `latentflow` tool. `args` excludes the program name.
/// Returns the process exit code: 0 success, 2 usage, 3 data, 4 numerical.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latentflow
