#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ovlab::cli {

// args[0] is the program name. Returns 0 on success, 1 on a usage error and
// 2 when the command itself fails.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ovlab::cli
