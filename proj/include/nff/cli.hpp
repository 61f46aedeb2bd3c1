#pragma once

#include <string>
#include <vector>

namespace nff::cli {

/// Entry point for the `nff` tool. Returns the process exit status; errors
/// are reported on standard error.
int run(int argc, const char* const* argv);

/// Convenience for tests: args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace nff::cli
