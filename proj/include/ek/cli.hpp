#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ek/error.hpp"

namespace ek::cli {

// 2 parse, 3 structural precondition, 4 resource bound, 1 anything else.
int exit_code(ErrorKind kind);

// Runs one command; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ek::cli
