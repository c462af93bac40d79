#pragma once

#include <string>
#include <vector>

namespace isac {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitAssertion = 4;

/// Full CLI entry point; args excludes argv[0]. Never throws.
int run_cli(const std::vector<std::string>& args);

} // namespace isac
