#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gmdeb {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitDomain = 3,
  kExitFitFailure = 4,
};

//! Runs one `gmdeb` command. `args` excludes the program name. Summaries go
//! to `out`, warnings and errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gmdeb
