#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hqfnn {

/// Runs one command-line invocation. Returns 0 on success, 2 on usage
/// errors and 1 on runtime failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace hqfnn
