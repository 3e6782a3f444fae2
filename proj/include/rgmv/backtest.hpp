#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgmv/benchmarks.hpp"
#include "rgmv/market_data.hpp"

namespace rgmv {

struct BacktestConfig {
    Index window_length = 252;
    double cost_rate = 0.005;  // proportional cost per unit traded
    std::vector<Strategy> strategies;
    double initial_wealth = 1.0;
    unsigned threads = 0;      // 0 = hardware concurrency

    void validate() const;
};

/// Weights after holding `w` through the rows of `period_returns` (log
/// returns): component j proportional to w_j prod_t exp(r_jt), renormalized.
VectorXd drifted_weights(const VectorXd& w, const MatrixXd& period_returns);

/// L^-1 sum_l sum_j |w_{j,l+1} - w_{j,l+}|: `targets` has L+1 entries and
/// `drifted[l]` is target l drifted to just before rebalance l+1.
double turnover(const std::vector<VectorXd>& targets, const std::vector<VectorXd>& drifted);

/// L^-1 sum_l sum_j |w_{j,l+1} - w_{j,l}|.
double target_turnover(const std::vector<VectorXd>& targets);

/// c sum_j |w_new_j - w_drifted_j|.
double transaction_cost(const VectorXd& w_new, const VectorXd& w_drifted, double cost_rate);

/// Additive wealth W_t = W_{t-1} + r_t (- tc_t when `net`); returns the
/// path W_1..W_n (the starting value is not included).
VectorXd cumulative_wealth(const VectorXd& portfolio_returns, const VectorXd& costs, bool net,
                           double initial_wealth = 1.0);
/// Same, with r_t = w_t' X_t from per-day weights and asset returns.
VectorXd cumulative_wealth(const MatrixXd& daily_weights, const MatrixXd& returns, const VectorXd& costs,
                           bool net, double initial_wealth = 1.0);

struct SdSr {
    double average = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1)
    double sr = 0.0;
};

/// Throws NumericalError when the series is constant (SR undefined).
SdSr sd_sr(const VectorXd& returns);

/// max_t (max_{s<=t} W_s - W_t) / max_{s<=t} W_s over a positive path.
double max_drawdown(const VectorXd& wealth);

/// 252 * mean(returns) / max_drawdown(wealth); throws when the drawdown is zero.
double calmar(const VectorXd& returns, const VectorXd& wealth);

struct WeightStats {
    double min = 0.0;
    double max = 0.0;
    double sd = 0.0;      // cross-sectional, divisor N
    double range = 0.0;   // max - min
    double mad_ew = 0.0;  // N^-1 sum_j |w_j - 1/N|
};

/// Per-rebalance statistics averaged over rebalances.
WeightStats weight_stats(const std::vector<VectorXd>& targets);

struct PerformanceMetrics {
    double to = 0.0;
    double tto = 0.0;
    double cw = 0.0;  // final wealth
    double average = 0.0;
    double sd = 0.0;
    std::optional<double> sr;
    std::optional<double> cr;
    std::optional<double> max_drawdown;
};

struct StrategyResult {
    std::string name;
    std::vector<Date> rebalance_dates;
    std::vector<VectorXd> targets;   // one per rebalance
    std::vector<VectorXd> drifted;   // drifted[l]: target l just before rebalance l+1
    std::vector<Date> days;          // out-of-sample dates
    VectorXd gross_returns;
    VectorXd costs;
    VectorXd net_returns;
    VectorXd wealth_gross;
    VectorXd wealth_net;
    PerformanceMetrics gross;
    PerformanceMetrics net;
    WeightStats weights;
    std::optional<std::string> failure;

    bool ok() const { return !failure.has_value(); }
};

struct BacktestResult {
    std::vector<std::string> tickers;
    std::vector<StrategyResult> strategies;

    bool all_succeeded() const;
    const StrategyResult& find(const std::string& name) const;
};

/// Rolling-window, monthly-rebalanced out-of-sample evaluation. A strategy
/// that fails on a window is aborted with a diagnostic; others continue.
/// Results are ordered by strategy name.
BacktestResult run_backtest(const ReturnPanel& panel, const BacktestConfig& config);

/// metrics.csv, weight_stats.csv, weights_<s>.csv and wealth_<s>.csv;
/// returns the paths written.
std::vector<std::filesystem::path> write_backtest_outputs(const BacktestResult& result,
                                                          const std::filesystem::path& dir);

}  // namespace rgmv
