#pragma once

#include <string>
#include <vector>

namespace radarego {

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Exit codes: 0 success, 1 usage error, 2 data error,
/// 3 numerical failure.
int run_cli(std::vector<std::string> args);

}  // namespace radarego
