#pragma once

#include <iosfwd>

namespace mudseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitItemFailed = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `mudseg` tool. Subcommands: segment, dataset, rf-train, rf-predict,
/// eval, overlay, serve.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mudseg
