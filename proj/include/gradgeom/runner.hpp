#pragma once

#include <string>

#include "gradgeom/config.hpp"

namespace gradgeom {

// Exit codes shared by the CLI and the test harness.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;
inline constexpr int kExitVerifyFailed = 4;

// Runs one validated subcommand, writing result.json and the per-metric data
// files under outdir. Returns an exit code; never throws ConfigError (the
// config must already be validated).
int run_subcommand(const std::string& subcommand, const Json& config, const std::string& outdir);

}  // namespace gradgeom
