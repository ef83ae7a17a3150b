#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace roughsim::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kValidation = 3;
inline constexpr int kRuntime = 4;

/// Runs one subcommand. args excludes the program name. Results that have no
/// output path go to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace roughsim::cli
