#pragma once

#include <ostream>

namespace dnacnn::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kConfigError = 2, kDiverged = 3 };

/// Entry point of the `dnacnn` tool: generate | train | benchmark | evaluate.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dnacnn::cli
