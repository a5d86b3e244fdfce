#ifndef PENDULUM_CLI_APP_HPP
#define PENDULUM_CLI_APP_HPP

#include <string>
#include <vector>

namespace pendulum::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// Entry point shared by the binary and the tests. Exit codes:
//   0 success, 2 validation error, 3 numerical failure, 4 config/usage error.
int run_cli(const std::vector<std::string>& args);

}  // namespace pendulum::cli

#endif
