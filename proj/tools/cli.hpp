#pragma once

#include <ostream>

namespace grushin::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumeric = 3, kInconclusive = 4 };

// Full command-line entry point; the JSON document of classify and
// verify-deficiency goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace grushin::cli
