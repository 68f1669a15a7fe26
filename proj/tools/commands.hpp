#pragma once

#include <string>

#include "run_context.hpp"

namespace nue::cli {

struct CommandOptions {
  std::string atoms;  // verify: atom CSV overriding [verify] atoms
};

// Runs one subcommand and writes its outputs and manifest. Returns the exit
// status for a completed run (0, or 1 when a verification failed).
int run_command(RunContext& ctx, const CommandOptions& opt);

}  // namespace nue::cli
