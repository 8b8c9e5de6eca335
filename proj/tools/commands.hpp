#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dmad::cli {

/// Runs one `dmad` invocation. `args` excludes the program name. Returns 0 on
/// success, 1 on a pipeline error and 2 on a usage error. Errors are written
/// to `err` as "error_kind: <Kind>: <message>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dmad::cli
