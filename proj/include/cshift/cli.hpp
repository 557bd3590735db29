#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cshift/error.hpp"

namespace cshift {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

int exit_code_for(ErrorKind kind) noexcept;

/// Runs one subcommand. `args` excludes the program name. Results go to
/// `out`; every failure writes one JSON line to `err`.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cshift
