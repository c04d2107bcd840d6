#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace filterkit::cli {

// Runs the tool with argv-style arguments (program name excluded). Result
// rows go to out as CSV or JSON; diagnostics go to err. Returns the process
// exit code: 0 on success, nonzero on any error. Output is a pure function
// of the arguments, including every seed-dependent value, so identical
// invocations produce identical bytes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace filterkit::cli
