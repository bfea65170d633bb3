#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gtan::cli {

// Runs one command line (without the program name). Results go to `out`,
// warnings and the one-line JSON error record to `err`. Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gtan::cli
