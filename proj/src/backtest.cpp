#include "rgmv/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rgmv/csv_format.hpp"
#include "rgmv/errors.hpp"
#include "rgmv/parallel.hpp"

namespace rgmv {

namespace {

constexpr const char* kEol = "\r\n";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

PerformanceMetrics performance(const VectorXd& returns, const VectorXd& wealth, double initial_wealth,
                               double to, double tto) {
    PerformanceMetrics m;
    m.to = to;
    m.tto = tto;
    m.cw = wealth.size() ? wealth[wealth.size() - 1] : initial_wealth;
    m.average = returns.size() ? returns.mean() : kNaN;
    m.sd = kNaN;
    if (returns.size() >= 2) {
        try {
            const SdSr s = sd_sr(returns);
            m.sd = s.sd;
            m.sr = s.sr;
        } catch (const NumericalError&) {
            m.sd = 0.0;
        }
    }
    VectorXd path(wealth.size() + 1);
    path << initial_wealth, wealth;
    try {
        m.max_drawdown = max_drawdown(path);
        m.cr = calmar(returns, path);
    } catch (const NumericalError&) {
    } catch (const std::invalid_argument&) {
    }
    return m;
}

StrategyResult run_strategy(const ReturnPanel& panel, const std::vector<EstimationWindow>& windows,
                            const Strategy& strategy, const BacktestConfig& config) {
    StrategyResult out;
    out.name = strategy.name();
    const Index first_day = windows.front().rebalance_row;
    const Index days = panel.rows() - first_day;
    out.gross_returns = VectorXd::Zero(days);
    out.costs = VectorXd::Zero(days);
    out.days.assign(panel.dates.begin() + first_day, panel.dates.end());

    for (std::size_t l = 0; l < windows.size(); ++l) {
        const auto& win = windows[l];
        VectorXd target;
        try {
            target = strategy.fit(panel.returns.middleRows(win.start, win.length())).values();
        } catch (const std::exception& e) {
            out.failure = "window ending " + format_iso_date(panel.dates[static_cast<std::size_t>(win.end)]) +
                          ": " + e.what();
            return out;
        }
        out.targets.push_back(target);
        out.rebalance_dates.push_back(win.rebalance_date);

        const Index begin = win.rebalance_row;
        const Index end = l + 1 < windows.size() ? windows[l + 1].rebalance_row : panel.rows();
        if (l > 0) {
            out.costs[begin - first_day] = transaction_cost(target, out.drifted.back(), config.cost_rate);
        }
        VectorXd w = target;
        for (Index t = begin; t < end; ++t) {
            const auto x = panel.returns.row(t).transpose();
            out.gross_returns[t - first_day] = w.dot(x);
            w = drifted_weights(w, panel.returns.middleRows(t, 1));
        }
        if (l + 1 < windows.size()) out.drifted.push_back(w);
    }

    out.net_returns = out.gross_returns - out.costs;
    out.wealth_gross = cumulative_wealth(out.gross_returns, out.costs, false, config.initial_wealth);
    out.wealth_net = cumulative_wealth(out.gross_returns, out.costs, true, config.initial_wealth);
    const double to = turnover(out.targets, out.drifted);
    const double tto = target_turnover(out.targets);
    out.gross = performance(out.gross_returns, out.wealth_gross, config.initial_wealth, to, tto);
    out.net = performance(out.net_returns, out.wealth_net, config.initial_wealth, to, tto);
    out.weights = weight_stats(out.targets);
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

}  // namespace

void BacktestConfig::validate() const {
    if (window_length < 2) throw ConfigError("window must be at least 2");
    if (!(cost_rate >= 0.0) || !std::isfinite(cost_rate)) throw ConfigError("cost must be non-negative");
    if (strategies.empty()) throw ConfigError("strategies must list at least one strategy");
    for (const auto& s : strategies) {
        s.robust.validate();
        s.pgd.validate();
    }
}

VectorXd drifted_weights(const VectorXd& w, const MatrixXd& period_returns) {
    if (period_returns.cols() != w.size()) throw std::invalid_argument("drift: dimension mismatch");
    const VectorXd growth = period_returns.colwise().sum().transpose().array().exp();
    VectorXd grown = w.cwiseProduct(growth);
    const double total = grown.sum();
    if (!(std::abs(total) > 0.0) || !std::isfinite(total)) {
        throw NumericalError("drifted portfolio value is zero; weights undefined");
    }
    return grown / total;
}

double turnover(const std::vector<VectorXd>& targets, const std::vector<VectorXd>& drifted) {
    if (targets.empty()) throw std::invalid_argument("turnover needs at least one target");
    if (drifted.size() + 1 != targets.size()) {
        throw std::invalid_argument("turnover: expected " + std::to_string(targets.size() - 1) +
                                    " drifted vectors, got " + std::to_string(drifted.size()));
    }
    if (drifted.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t l = 0; l < drifted.size(); ++l) {
        if (drifted[l].size() != targets[l + 1].size()) throw std::invalid_argument("turnover: dimension mismatch");
        total += (targets[l + 1] - drifted[l]).lpNorm<1>();
    }
    return total / static_cast<double>(drifted.size());
}

double target_turnover(const std::vector<VectorXd>& targets) {
    if (targets.size() < 2) return 0.0;
    double total = 0.0;
    for (std::size_t l = 0; l + 1 < targets.size(); ++l) total += (targets[l + 1] - targets[l]).lpNorm<1>();
    return total / static_cast<double>(targets.size() - 1);
}

double transaction_cost(const VectorXd& w_new, const VectorXd& w_drifted, double cost_rate) {
    if (!(cost_rate >= 0.0)) throw std::invalid_argument("cost rate must be non-negative");
    if (w_new.size() != w_drifted.size()) throw std::invalid_argument("transaction cost: dimension mismatch");
    return cost_rate * (w_new - w_drifted).lpNorm<1>();
}

VectorXd cumulative_wealth(const VectorXd& portfolio_returns, const VectorXd& costs, bool net,
                           double initial_wealth) {
    if (costs.size() != portfolio_returns.size()) throw std::invalid_argument("wealth: misaligned costs");
    VectorXd wealth(portfolio_returns.size());
    double w = initial_wealth;
    for (Index t = 0; t < portfolio_returns.size(); ++t) {
        w += portfolio_returns[t];
        if (net) w -= costs[t];
        wealth[t] = w;
    }
    return wealth;
}

VectorXd cumulative_wealth(const MatrixXd& daily_weights, const MatrixXd& returns, const VectorXd& costs,
                           bool net, double initial_wealth) {
    if (daily_weights.rows() != returns.rows() || daily_weights.cols() != returns.cols()) {
        throw std::invalid_argument("wealth: misaligned weights and returns");
    }
    const VectorXd r = daily_weights.cwiseProduct(returns).rowwise().sum();
    return cumulative_wealth(r, costs, net, initial_wealth);
}

SdSr sd_sr(const VectorXd& returns) {
    if (returns.size() < 2) throw std::invalid_argument("SD needs at least two returns");
    SdSr out;
    out.average = returns.mean();
    out.sd = std::sqrt((returns.array() - out.average).square().sum() / static_cast<double>(returns.size() - 1));
    if (out.sd == 0.0) throw NumericalError("constant return series: SD = 0, Sharpe ratio undefined");
    out.sr = out.average / out.sd;
    return out;
}

double max_drawdown(const VectorXd& wealth) {
    if (wealth.size() == 0) throw std::invalid_argument("drawdown of an empty path");
    double peak = wealth[0];
    double worst = 0.0;
    for (Index t = 0; t < wealth.size(); ++t) {
        if (!(wealth[t] > 0.0)) throw NumericalError("non-positive wealth; drawdown undefined");
        peak = std::max(peak, wealth[t]);
        worst = std::max(worst, (peak - wealth[t]) / peak);
    }
    return worst;
}

double calmar(const VectorXd& returns, const VectorXd& wealth) {
    if (returns.size() == 0) throw std::invalid_argument("Calmar ratio of an empty series");
    const double dd = max_drawdown(wealth);
    if (dd == 0.0) throw NumericalError("zero drawdown; Calmar ratio undefined");
    return 252.0 * returns.mean() / dd;
}

WeightStats weight_stats(const std::vector<VectorXd>& targets) {
    if (targets.empty()) throw std::invalid_argument("weight statistics need at least one rebalance");
    WeightStats acc;
    for (const auto& w : targets) {
        const double n = static_cast<double>(w.size());
        const double lo = w.minCoeff();
        const double hi = w.maxCoeff();
        acc.min += lo;
        acc.max += hi;
        acc.range += hi - lo;
        acc.sd += std::sqrt((w.array() - w.mean()).square().sum() / n);
        acc.mad_ew += (w.array() - 1.0 / n).abs().sum() / n;
    }
    const double count = static_cast<double>(targets.size());
    acc.min /= count;
    acc.max /= count;
    acc.sd /= count;
    acc.range /= count;
    acc.mad_ew /= count;
    return acc;
}

bool BacktestResult::all_succeeded() const {
    return std::all_of(strategies.begin(), strategies.end(), [](const auto& s) { return s.ok(); });
}

const StrategyResult& BacktestResult::find(const std::string& name) const {
    for (const auto& s : strategies) {
        if (s.name == name) return s;
    }
    throw std::out_of_range("no strategy named " + name);
}

BacktestResult run_backtest(const ReturnPanel& panel, const BacktestConfig& config) {
    config.validate();
    panel.validate();
    const auto windows = rolling_windows(panel, config.window_length);
    BacktestResult result;
    result.tickers = panel.tickers;
    result.strategies.resize(config.strategies.size());
    parallel_for(
        config.strategies.size(),
        [&](std::size_t i) { result.strategies[i] = run_strategy(panel, windows, config.strategies[i], config); },
        config.threads);
    std::stable_sort(result.strategies.begin(), result.strategies.end(),
                     [](const StrategyResult& a, const StrategyResult& b) { return a.name < b.name; });
    return result;
}

std::vector<std::filesystem::path> write_backtest_outputs(const BacktestResult& result,
                                                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    const auto metrics_path = dir / "metrics.csv";
    {
        auto out = open_output(metrics_path);
        out << "strategy,returns,TO,TTO,CW,SD,SR,CR" << kEol;
        for (const auto& s : result.strategies) {
            if (!s.ok()) continue;
            for (const auto* kind : {"gross", "net"}) {
                const auto& m = std::string_view(kind) == "gross" ? s.gross : s.net;
                out << csv_field(s.name) << ',' << kind << ',' << format_number(m.to) << ','
                    << format_number(m.tto) << ',' << format_number(m.cw) << ',' << format_number(m.sd) << ','
                    << format_number(m.sr) << ',' << format_number(m.cr) << kEol;
            }
        }
    }
    written.push_back(metrics_path);

    const auto stats_path = dir / "weight_stats.csv";
    {
        auto out = open_output(stats_path);
        out << "strategy,min,max,sd,max_min,mad_ew" << kEol;
        for (const auto& s : result.strategies) {
            if (!s.ok()) continue;
            out << csv_field(s.name) << ',' << format_number(s.weights.min) << ',' << format_number(s.weights.max)
                << ',' << format_number(s.weights.sd) << ',' << format_number(s.weights.range) << ','
                << format_number(s.weights.mad_ew) << kEol;
        }
    }
    written.push_back(stats_path);

    for (const auto& s : result.strategies) {
        if (!s.ok()) continue;
        const auto weights_path = dir / ("weights_" + s.name + ".csv");
        {
            auto out = open_output(weights_path);
            out << "date";
            for (const auto& t : result.tickers) out << ',' << csv_field(t);
            out << kEol;
            for (std::size_t l = 0; l < s.targets.size(); ++l) {
                out << format_iso_date(s.rebalance_dates[l]);
                for (Index j = 0; j < s.targets[l].size(); ++j) out << ',' << format_number(s.targets[l][j]);
                out << kEol;
            }
        }
        written.push_back(weights_path);

        const auto wealth_path = dir / ("wealth_" + s.name + ".csv");
        {
            auto out = open_output(wealth_path);
            out << "date,gross,net" << kEol;
            for (std::size_t t = 0; t < s.days.size(); ++t) {
                const auto i = static_cast<Index>(t);
                out << format_iso_date(s.days[t]) << ',' << format_number(s.wealth_gross[i]) << ','
                    << format_number(s.wealth_net[i]) << kEol;
            }
        }
        written.push_back(wealth_path);
    }
    return written;
}

}  // namespace rgmv
