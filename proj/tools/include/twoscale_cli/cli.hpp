#pragma once

#include <iosfwd>

namespace twoscale::cli {

/// Exit codes: 0 success / all checks passed, 1 failed check or solver
/// failure, 2 usage or configuration error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace twoscale::cli
