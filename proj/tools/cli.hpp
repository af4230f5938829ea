#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace detgeom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 1;
inline constexpr int kExitInternal = 2;

/// Runs one subcommand. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace detgeom::cli
