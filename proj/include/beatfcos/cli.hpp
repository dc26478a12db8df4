#pragma once

#include <iosfwd>

namespace beatfcos::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand. Returns 0 on success, 1 on usage errors (usage text
// goes to err), 2 on data errors.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace beatfcos::cli
