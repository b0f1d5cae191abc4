#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfnet::cli {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 1 on a library error (one JSON line on `err`), 2 on bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfnet::cli
