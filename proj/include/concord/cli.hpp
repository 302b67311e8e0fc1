#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace concord {

/// Entry point of the `concord` tool. `args` is argv including the program
/// name. Records go to `out` (or --out); a failure writes one JSON error line
/// to `err` and returns nonzero (1 for runtime errors, 2 for usage errors).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace concord
