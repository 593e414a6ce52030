// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace ndater::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2, kNumericError = 3 };

// Entry point of the `ndater` tool. Machine-readable output goes to `out`,
// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ndater::cli
