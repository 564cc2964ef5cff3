#pragma once

#include <string>
#include <vector>

namespace nloch {

// Exit codes of the command-line tool.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;

// Entry point of the nloch tool. Subcommands: simulate, tangent-check, adjoint-check, identify, twin,
// sweep. Returns 0 on success, 2 when a check fails and 1 on any error.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

const char* version();

} // namespace nloch
