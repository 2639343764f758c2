#pragma once

#include <iosfwd>

namespace mottrw::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kVerificationFailure = 2 };

// Entry point of the mottrw tool; never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mottrw::cli
