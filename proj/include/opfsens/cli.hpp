#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace opfsens::cli {

/// Runs the opf-sense command line. `args` excludes the program name.
/// Returns 0 on success, 1 on a domain error (a JSON error object is written
/// to `out`) and 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opfsens::cli
