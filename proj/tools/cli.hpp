// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pfa::cli {

enum ExitCode { Ok = 0, Usage = 2, Config = 3, Runtime = 4 };

/// Runs one `pfa` invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pfa::cli
