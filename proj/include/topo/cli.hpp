#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace topo::cli {

// Exit codes: 0 success, 2 validation error, 3 numerical inadequacy or failed audit check.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Report with the wall-time field removed, for determinism comparisons.
std::string strip_timing(const std::string& report);

}  // namespace topo::cli
