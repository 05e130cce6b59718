#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace arapipe::cli {

/// Runs one `arapipe` command. `args` excludes the program name. Errors are
/// reported on `err` as a single line "arapipe: error=<class> <message>"
/// and mapped to an exit status.
int Run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace arapipe::cli
