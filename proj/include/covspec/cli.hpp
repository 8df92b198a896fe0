#pragma once

#include <string>
#include <vector>

namespace covspec::cli {

// Exit codes, documented in --help and the README.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitIo = 2;
inline constexpr int kExitInvalidSpec = 3;
inline constexpr int kExitDomain = 4;
inline constexpr int kExitNumerical = 5;
inline constexpr int kExitInternal = 70;

inline constexpr std::uint64_t kDefaultSeed = 12345678ULL;

// Runs the full command-line front end; argv excludes the program name.
int run(const std::vector<std::string>& argv);

}  // namespace covspec::cli
