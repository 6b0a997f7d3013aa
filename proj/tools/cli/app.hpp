#pragma once

#include <iosfwd>

namespace ltvwm::cli {

/// Full command-line entry point: parses arguments, dispatches, maps errors to exit codes
/// (0 ok, 1 pipeline or validation failure, 2 usage error).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ltvwm::cli
