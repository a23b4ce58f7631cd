#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace scanleak {

// Command-line front end. `args` holds argv[1..] in order. Returns the
// process exit code: 0 for success (a partial key recovery still succeeds),
// 1 for usage or input errors, 2 for a broken internal invariant.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

} // namespace scanleak
