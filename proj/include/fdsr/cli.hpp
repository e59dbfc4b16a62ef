#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fdsr {

/// Name of the environment variable that sets the default results directory.
inline constexpr const char* kResultsDirEnv = "FDSR_RESULTS_DIR";

/// Entry point behind the `fdsr` executable. `args` excludes the program
/// name. Returns 0 on success, 1 on a runtime failure, 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdsr
