#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rgmv/config.hpp"

namespace rgmv::cli {

enum ExitCode : int { ok = 0, config_error = 2, data_error = 3, strategy_error = 4 };

/// Full command-line entry point: parses flags, resolves the run config,
/// runs the command and writes artifacts plus run_manifest.json.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Individual commands on an already-resolved config.
int cmd_backtest(const RunConfig& config, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& err);
int cmd_estimate(const RunConfig& config, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace rgmv::cli
