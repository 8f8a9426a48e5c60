#pragma once

#include <string>

#include "exbound/config.hpp"

// Batch orchestration behind the command-line tool: loads a RunConfig,
// drives the requested pipeline (regime analysis, boundary solve, pricing
// sweep, hedge decomposition, solver-vs-oracle verification, volatility
// sweep) and emits CSV artifacts plus a manifest into the output directory.
namespace exbound {

inline constexpr const char* kToolName = "exbound";
inline constexpr const char* kToolVersion = "1.0.0";

// Exit codes shared by the library entry point and the binary.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;      // unexpected internal error
inline constexpr int kExitConfig = 2;       // unusable configuration/input
inline constexpr int kExitNoConverge = 3;   // some boundary node unconverged
inline constexpr int kExitVerifyFail = 4;   // oracle comparison failed

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Accepts "error", "warn", "info", "debug"; throws ConfigError otherwise.
LogLevel parse_log_level(const std::string& text);

struct RunOptions {
    std::string config_path;
    // Overrides the config's output directory when non-empty.
    std::string out_dir;
    // Sweep parallelism; 0 picks the hardware thread count.
    int workers = 0;
    LogLevel log_level = LogLevel::Info;
};

// Runs one subcommand of {regimes, boundary, price, hedge, verify, sweep}
// end to end.  Returns an exit code; never throws (errors are logged and
// mapped to kExitFailure/kExitConfig).
int run_subcommand(const std::string& name, const RunOptions& opt);

}  // namespace exbound
