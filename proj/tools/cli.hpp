#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cyberdep::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,  // I/O or validation
    kUsage = 2,
};

/// Runs one subcommand. `args` excludes the program name. Artifacts go to
/// files or `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cyberdep::cli
