#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pba {

// Exit codes: 0 success, 1 usage or configuration, 2 data, 3 provider.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pba
