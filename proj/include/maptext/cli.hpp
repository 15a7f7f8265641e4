#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace maptext::cli {

// Exit codes: 0 ok, 1 runtime failure, 2 usage error.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

// `args[0]` is the program name. Machine-readable results go to `out`,
// diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace maptext::cli
