#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace snmlab {

// Full command-line front end; returns the process exit status:
//   0 success, 1 numerical/acceptance failure, 2 usage or config error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace snmlab
