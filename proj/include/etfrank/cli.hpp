#pragma once

#include <exception>
#include <iosfwd>

namespace etfrank {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;
/// selftest ran to completion but its quality checks did not hold.
inline constexpr int kExitSelftestFailed = 4;

/// Maps an exception to the process exit code.
int exit_code_for(const std::exception& e) noexcept;

/// Entry point of the `etfrank` executable. Summaries go to `out`, error
/// diagnostics to `err`, log lines to stderr through spdlog.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Applies the ETFRANK_LOG environment variable to the global logger.
void configure_logging_from_env();

}  // namespace etfrank
