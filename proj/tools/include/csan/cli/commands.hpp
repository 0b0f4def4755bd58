#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csan::cli {

enum ExitCode : int { exit_ok = 0, exit_negative = 1, exit_usage = 2, exit_model = 3, exit_budget = 4 };

// args excludes the program name. Results go to `out` as JSON or CSV; errors
// go to `out` as a JSON object {code, message, location?} with a nonzero
// exit code. `err` only receives usage text.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csan::cli
