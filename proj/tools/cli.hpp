#pragma once

namespace slope::cli {

enum ExitCode
{
  ok = 0,
  usage_error = 1,
  data_error = 2,
  not_converged = 3
};

/// Entry point of the `slope` command; returns the process exit code.
int
run(int argc, const char* const* argv);

} // namespace slope::cli
