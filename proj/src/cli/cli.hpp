#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace dmf {

/// Runs the `dmf` command line. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 internal error, 2 input or spec error.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace dmf
