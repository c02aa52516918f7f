#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dpe::cli {

/// Exit status: 0 success, 1 numerical failure, 2 configuration or usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpe::cli
