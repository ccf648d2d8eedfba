#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace laf::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kDegenerate = 2;  // output written, with a warning

/// Entry point of the `laf` tool. Results go to `out` (unless written to a
/// file), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Worker count for `eval`: LAF_THREADS when set and positive, otherwise the
/// hardware concurrency.
unsigned worker_count();

}  // namespace laf::cli
