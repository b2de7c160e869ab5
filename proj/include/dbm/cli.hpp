// SPDX-License-Identifier: Apache-2.0
//
// The `dbm` command line: subcommands region, poly, rs, bound, verify and
// scan over a JSON config.
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dbm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariant = 1;
inline constexpr int kExitUsage = 2;

// args excludes the program name. Results go to `out` unless --out names a
// file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dbm
