#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace taumix::cli {

enum ExitCode : int { ok = 0, usage = 1, data_format = 2, infeasible = 3 };

/// args[0] is the program name. Output files named "-" go to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taumix::cli
