#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lungbench {

// Exit codes: 0 success, 2 input/validation error, 3 internal invariant
// violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInternal = 3;

// Runs the full command-line surface in-process: eval-detect, eval-classify,
// curate {nlst3d,negatives,sws,patches}, render, replay. args excludes the
// program name. Never throws; failures map to the exit codes above.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lungbench
