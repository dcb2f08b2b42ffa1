#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uiwf::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kDataError = 2 };

// Runs one `uiwf` invocation. `args` excludes the program name. Normal output
// goes to `out`, usage text and diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace uiwf::cli
