#pragma once

#include <iosfwd>

namespace phonon_forge::cli {

// Parses argv and runs one subcommand. Returns the process exit code:
// 0 success, 2 usage or configuration error, 3 numerical-validity error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace phonon_forge::cli
