#pragma once

// Run configuration for the command-line tool: JSON schema, defaults and
// validation. Every error names the offending key.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgmv/backtest.hpp"
#include "rgmv/gmv_pgd.hpp"
#include "rgmv/robust_core.hpp"

namespace rgmv {

enum class Command { backtest, simulate, estimate };

std::string_view to_string(Command command);
Command parse_command(std::string_view text);
std::string_view to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(std::string_view text);

struct ExperimentSpec {
    std::string name = "all";      // tail | convergence | contamination | all
    Index assets = 40;             // N for the synthetic covariance
    Index horizon = 250;           // T per replication
    int steps = 100;
    int replications = 200;
    double p_heavy = 0.001;
    double effective_rank = 3.0;   // target for the synthetic covariance
    Index benign_span = 15;        // top-m span containing the ones vector

    void validate() const;
};

struct RunConfig {
    Command command = Command::backtest;
    std::filesystem::path input;
    std::filesystem::path output = "out";
    Index window = 252;
    double cost = 0.005;
    std::vector<std::string> strategies{"ew", "gmv", "gmv_long", "gmv_lin", "gmv_robust"};
    EstimatorMode estimator = EstimatorMode::robust;
    RobustConfig robust;
    PgdConfig pgd;
    ExperimentSpec experiment;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    void validate() const;
    BacktestConfig backtest_config() const;
};

/// Defaults overlaid with `doc`; nested seeds not given fall back to `seed`.
RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

RobustConfig robust_config_from_json(const nlohmann::json& doc, std::uint64_t default_seed = 0);
nlohmann::json to_json(const RobustConfig& config);
PgdConfig pgd_config_from_json(const nlohmann::json& doc, std::uint64_t default_seed = 0);
nlohmann::json to_json(const PgdConfig& config);

}  // namespace rgmv
