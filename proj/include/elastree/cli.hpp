// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exposed as a library function so the exit-code
// contract is testable in-process:
//   0 success, 2 invalid scenario/schema or usage, 3 unsatisfiable layout
//   bounds, 4 enumeration cap exceeded under --oracle, 1 anything else.

#pragma once

#include <string>
#include <vector>

namespace elastree {

int cli_main(int argc, const char* const* argv);
int cli_main(const std::vector<std::string>& args);  // convenience for tests

}  // namespace elastree
