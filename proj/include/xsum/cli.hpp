#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace xsum {

/// Runs one command line. `args` excludes the program name. Returns 0 on
/// success, 1 on a user error, 2 on data corruption.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xsum
