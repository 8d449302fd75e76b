#pragma once

#include <string>
#include <vector>

namespace citegen {

// Process exit codes.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kOther = 1;
inline constexpr int kMissingFile = 2;
inline constexpr int kConfig = 3;
inline constexpr int kNumerical = 4;
inline constexpr int kData = 5;
}  // namespace exit_code

// Entry point of the `citegen` tool; args[0] is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace citegen
