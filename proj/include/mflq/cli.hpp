#pragma once

#include <iosfwd>

namespace mflq {

// Exit codes: 0 solved or verified, 1 input error, 2 no certified solution, 3 simulation blow-up.
enum ExitCode { kExitOk = 0, kExitInput = 1, kExitUncertified = 2, kExitBlowUp = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mflq
