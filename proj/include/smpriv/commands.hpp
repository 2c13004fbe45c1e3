#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "smpriv/errors.hpp"

namespace smpriv {

// Process exit status per error category.
int exit_code(ErrorKind kind);

// Runs the command line `args` (args[0] is the program name). Normal output goes
// to `out`; failures print one `error: <category>: <message>` line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace smpriv
