#pragma once

#include <iosfwd>

namespace veloplan::cli
{

enum ExitCode : int
{
    kExact = 0,
    kNotExact = 2,
    kInfeasible = 3,
    kInputError = 4,
    kSolverFailure = 5,
};

/// Parses argv and runs one subcommand. Diagnostics go to `err`, progress
/// lines to `out`.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace veloplan::cli
