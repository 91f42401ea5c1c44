#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace catlasso::cli {

/**
 * Entry point behind the catlasso binary; exposed so tests can drive the
 * command surface directly. args excludes the program name.
 *
 * Exit codes: 0 success; 2 invalid input or configuration (message names
 * the offending line or flag); 3 solver non-convergence or failed
 * replication (diagnostics and partial results still written).
 */
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace catlasso::cli
