#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decman {

/// Exit codes: 0 success, 1 configuration or input error, 2 projection-tube
/// abort during a run.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace decman
