#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loanfair {

/// Runs one command line (program name excluded). Returns the exit status:
/// 0 on success, 1 when a command fails, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loanfair
