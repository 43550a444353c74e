// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace losnet::cli {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitUnwritable = 2;

/// Runs one command line (program name excluded): generate, wrangle, cv,
/// featsel, hpo, depth or report. Artifacts are written as "<path>.partial"
/// and renamed once complete, so a nonzero exit never leaves a truncated
/// file under its final name. Returns 0 on success, 1 on usage or input
/// errors, 2 when an output path cannot be written.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace losnet::cli
