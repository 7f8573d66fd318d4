#pragma once

// Internal POSIX process runner with stdin feeding, stdout/stderr capture,
// and a hard wall-clock timeout.

#include <chrono>
#include <string>
#include <vector>

namespace fsmscg::internal {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  bool timed_out = false;
};

// Throws fsmscg::Error when the executable cannot be started (distinct
// from the child failing); a timed-out child is killed and reported via
// `timed_out`, never by blocking forever.
ProcessResult run_process(const std::vector<std::string>& argv,
                          std::string_view stdin_data,
                          std::chrono::milliseconds timeout);

// True when `name` resolves to an executable (absolute path or on PATH).
bool executable_exists(const std::string& name);

}  // namespace fsmscg::internal
