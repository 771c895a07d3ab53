#pragma once

#include <string>
#include <vector>

namespace irony::cli {

// Runs one subcommand. `args` excludes the program name. Returns the process
// exit status: 0 on success, 1 on a usage or validation error, 2 on a runtime
// failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace irony::cli
