#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace landtriage::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kUsage = 2;  // also not-found
inline constexpr int kValidation = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace landtriage::cli
