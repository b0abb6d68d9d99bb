#pragma once

#include <iosfwd>

namespace condcop::cli {

enum ExitCode : int
{
  exit_ok = 0,
  exit_config = 2,
  exit_partial = 3,
  exit_data = 4,
  exit_acceptance = 5
};

//! Runs the `condcop` front end with the given arguments (argv[0] is the
//! program name). Normal output goes to `out`, diagnostics to `err`.
int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace condcop::cli
