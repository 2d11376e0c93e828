#pragma once

namespace folq {

/// Entry point shared by the binary and the tests. Returns the process
/// exit code; all errors land on stderr with an "error: " prefix.
int run_cli(int argc, const char* const* argv);

}  // namespace folq
