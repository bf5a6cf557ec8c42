#pragma once

namespace anomflow::cli {

/// Entry point behind the `anomflow` binary. Exit codes: 0 success,
/// 2 input/data error, 3 config error, 4 internal invariant violation.
int run(int argc, const char* const* argv);

}  // namespace anomflow::cli
