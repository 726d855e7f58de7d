#pragma once

#include <ostream>

namespace smbo::cli {

/// Entry point of the `smbo` tool. Returns 0 on success, 2 for invalid
/// input (bad flags, documents or values, or an operation the study's state
/// forbids) and 1 for internal errors. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smbo::cli
