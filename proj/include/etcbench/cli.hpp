#pragma once

#include <stdexcept>
#include <string>

namespace etcbench {

/// Bad flag values detected after parsing; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs one subcommand. Returns 0 on success, 2 on usage errors, 1 when the
/// command itself fails.
int run_cli(int argc, char** argv);

}  // namespace etcbench
