#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sciembed::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Entry point shared by the executable and the tests. `args` excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

const char* version() noexcept;

}  // namespace sciembed::cli
