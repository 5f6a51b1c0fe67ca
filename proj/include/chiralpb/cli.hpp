#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chiralpb {

inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes: 0 success, 1 usage error, 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace chiralpb
