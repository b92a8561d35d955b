#pragma once

#include <string>
#include <vector>

namespace pps {

// Exit codes: 0 success / comparison pass, 1 comparison fail, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

// args[0] is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace pps
