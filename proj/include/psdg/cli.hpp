#pragma once

#include <iosfwd>

namespace psdg::cli {

enum ExitCode : int {
  kOk = 0,
  kModelError = 1,   // validation, model, oracle mismatch, explosion bounds
  kInputError = 2,   // I/O, parse or format problems, bad flags
  kZeroEvidence = 3, // contradicting stream under --on-zero-evidence=error
};

/// Runs the command line `argv` with the given streams in place of the
/// standard ones and returns the process exit code.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace psdg::cli
