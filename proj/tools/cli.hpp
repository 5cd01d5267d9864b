#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lhspline::cli {

/// Runs the command line `args` (without the program name). Progress goes
/// to `out`, error JSON to `err`. Returns the process exit code:
/// 0 ok, 2 usage, 3 data, 4 numeric.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lhspline::cli
