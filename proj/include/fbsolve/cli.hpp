#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fbsolve {

/// Entry point behind the `fbsolve` binary, separated for in-process tests.
/// Exit codes: 0 success / all-pass, 1 solver failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fbsolve
