#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "dequant/cli/config.hpp"
#include "dequant/cli/verify.hpp"

namespace dequant::cli {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_tolerance = 4 };

enum class EvolveMode { quantum, classical, deformed, gap };
EvolveMode parse_mode(const std::string& text);
std::string to_string(EvolveMode mode);

struct CommandResult {
  int exit_code = exit_ok;
  /// ResultEnvelope: config echo, summaries, residuals, status.
  nlohmann::ordered_json envelope;
  /// Human-readable lines for stderr (bounds, diagnostics).
  std::string diagnostics;
};

/// Kinetic report (and optionally the independent minimizer) for the
/// configured state.
CommandResult cmd_report(const RunConfig& config);

/// Runs one propagation and writes CSV series plus summary.json into out_dir.
CommandResult cmd_evolve(const RunConfig& config, EvolveMode mode, const std::filesystem::path& out_dir);

CommandResult cmd_verify(const VerifyOptions& options);

/// JSON with every double at 17 significant digits; non-finite values are
/// written as null.
std::string dump_json(const nlohmann::ordered_json& value, int indent = 2);

/// Writes `text` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dequant::cli
