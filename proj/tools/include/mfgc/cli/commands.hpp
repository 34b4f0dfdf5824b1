#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mfgc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitViolations = 3;
/// Converged, but a diagnostics margin failed.
inline constexpr int kExitUnverified = 4;

int cmd_solve(const std::string& config_path, std::ostream& out, std::ostream& err);

/// One independent solve per value of the dotted key, at most `threads` at a time.
int cmd_sweep(const std::string& config_path, const std::string& key, const std::vector<double>& values,
              std::size_t threads, std::ostream& out, std::ostream& err);

struct CheckOptions {
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    /// Tuples for the kernel-gradient positivity sweep; zero skips it unless the config asks.
    std::size_t h4_tuples = 0;
};

int cmd_check(const std::string& config_path, const CheckOptions& opts, std::ostream& out, std::ostream& err);

/// Re-runs the diagnostics on the CSV fields of a finished run.
int cmd_diagnose(const std::string& run_dir, std::ostream& out, std::ostream& err);

/// Splits "a,b,c" into numbers; throws std::invalid_argument on junk.
std::vector<double> parse_value_list(const std::string& text);

} // namespace mfgc::cli
