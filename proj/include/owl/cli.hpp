#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "owl/error.hpp"

namespace owl::cli {

// Missing or contradictory flags.
class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitTraining = 3;

// Maps an exception escaping a command to its exit code.
int exit_code(const std::exception& error);

// Parses `args` (without the program name) and runs one subcommand. Errors
// are reported on `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace owl::cli
