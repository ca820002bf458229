#pragma once

#include <iosfwd>

namespace specdetect::cli {

// Subcommands: extract, score, detect, eval, bench, synth.
// Exit codes: 0 success, 1 usage or validation error, 2 I/O or network failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specdetect::cli
