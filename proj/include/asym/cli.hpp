#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace asym {

// Runs one subcommand (train, scan, interpolate, soup, fed, probe ...).
// Returns 0 on success, 2 on a usage or configuration error, 1 on a runtime failure.
//
// Every subcommand accepts --config FILE with flat `key = value` lines whose
// keys are the long flag names; flags given on the command line win.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asym
