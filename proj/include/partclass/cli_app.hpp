#pragma once

namespace partclass {

// Full pipeline CLI: gen, augment, train, eval, classify, gradcheck.
// Exit codes: 0 success, 1 domain error ("error: <code>: <detail>" on
// stderr), 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace partclass
