#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pilid::cli {

// args excludes the program name. Returns the process exit code: 0 on
// success, 1 on a runtime failure, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Reads `key = value` lines ('#' comments, blank lines allowed) and returns
// them as `--key=value` tokens.
std::vector<std::string> config_tokens(const std::string& path);

}  // namespace pilid::cli
