#pragma once

#include <ostream>

namespace neurostrike {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands: topology build | stimulus gen | run | grid | report.
// Returns 0 on success, 1 on configuration / usage errors, 2 on runtime errors.
int cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace neurostrike
