#include "rgmv/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "rgmv/backtest.hpp"
#include "rgmv/errors.hpp"
#include "rgmv/simulation.hpp"

namespace rgmv::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void prepare_output(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output: cannot create directory " + dir.string());
    const fs::path probe = dir / ".rgmv_write_probe";
    {
        std::ofstream test(probe);
        if (!test) throw ConfigError("output: directory " + dir.string() + " is not writable");
    }
    fs::remove(probe, ec);
}

void write_manifest(const RunConfig& config, const std::vector<fs::path>& artifacts, int status) {
    json files = json::array();
    for (const auto& path : artifacts) {
        files.push_back({{"path", fs::relative(path, config.output).generic_string()},
                         {"sha256", sha256_file(path)},
                         {"bytes", fs::file_size(path)}});
    }
    json manifest{{"config", to_json(config)}, {"artifacts", files}, {"exit_code", status}};
    std::ofstream out(config.output / "run_manifest.json");
    if (!out) throw DataError("cannot write run_manifest.json");
    out << manifest.dump(2) << '\n';
}

ReturnPanel load_returns(const RunConfig& config) { return to_log_returns(load_price_csv(config.input)); }

fs::path write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    return path;
}

int finish(const RunConfig& config, const std::vector<fs::path>& artifacts, int status) {
    write_manifest(config, artifacts, status);
    return status;
}

json vector_json(const VectorXd& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return hex.str();
}

int cmd_backtest(const RunConfig& config, std::ostream& err) {
    const ReturnPanel panel = load_returns(config);
    const BacktestResult result = run_backtest(panel, config.backtest_config());
    const auto artifacts = write_backtest_outputs(result, config.output);
    int status = ok;
    for (const auto& s : result.strategies) {
        if (!s.ok()) {
            err << "strategy " << s.name << " failed: " << *s.failure << '\n';
            status = strategy_error;
        }
    }
    return finish(config, artifacts, status);
}

int cmd_estimate(const RunConfig& config, std::ostream& err) {
    const ReturnPanel panel = load_returns(config);
    if (panel.rows() < config.window) {
        throw DataError("estimate needs at least " + std::to_string(config.window) + " return rows, " +
                        config.input.string() + " has " + std::to_string(panel.rows()));
    }
    const Index start = panel.rows() - config.window;
    const MatrixXd sample = panel.returns.bottomRows(config.window);

    PgdTrace trace;
    std::optional<ActionEstimator> action;
    try {
        action = config.estimator == EstimatorMode::robust ? ActionEstimator::robust(sample, config.robust)
                                                          : ActionEstimator::plugin_from_sample(sample);
        if (config.pgd.mode == PgdMode::mv) {
            const VectorXd mean = config.estimator == EstimatorMode::robust
                                      ? robust_mean(sample, config.robust)
                                      : VectorXd(sample.colwise().mean().transpose());
            trace = mv_pgd(mean, *action, config.pgd);
        } else {
            trace = gmv_pgd(*action, config.pgd);
        }
    } catch (const NumericalError& e) {
        err << "estimate failed: " << e.what() << '\n';
        return finish(config, {}, strategy_error);
    }

    const WeightVector w = trace.final_weights();
    json doc{{"mode", std::string(to_string(config.estimator))},
             {"objective", std::string(to_string(config.pgd.mode))},
             {"tickers", panel.tickers},
             {"weights", vector_json(w.values())},
             {"window", {{"start", format_iso_date(panel.dates[static_cast<std::size_t>(start)])},
                         {"end", format_iso_date(panel.dates.back())},
                         {"length", config.window}}},
             {"eta", trace.eta},
             {"steps", trace.steps},
             {"buckets", nullptr},
             {"truncation", nullptr}};
    if (const auto* b = action->bucketed()) {
        doc["buckets"] = b->buckets();
        doc["truncation"] = b->truncation();
    }
    const auto& r = trace.in_sample_risk;
    if (!r.empty()) {
        const auto best = std::min_element(r.begin(), r.end());
        doc["trace"] = {{"initial_risk", r.front()},
                        {"final_risk", r.back()},
                        {"min_risk", *best},
                        {"argmin_step", best - r.begin()}};
    }
    return finish(config, {write_json(config.output / "weights.json", doc)}, ok);
}

int cmd_simulate(const RunConfig& config, std::ostream&) {
    const auto& spec = config.experiment;
    CovEstimate base = [&] {
        if (config.input.empty()) {
            return synthetic_market_covariance(spec.assets, spec.effective_rank, derive_seed(config.seed, 0));
        }
        const ReturnPanel panel = load_returns(config);
        if (panel.rows() < config.window) {
            throw DataError("simulate needs at least " + std::to_string(config.window) + " return rows");
        }
        return sample_covariance(panel.returns.bottomRows(config.window));
    }();
    if (spec.benign_span > base.dimension()) throw ConfigError("experiment.benign_span exceeds the asset count");
    const CovEstimate cov = rotate_for_benign_optimum(base, spec.benign_span).rotated;

    ExperimentOptions options;
    options.steps = spec.steps;
    options.replications = spec.replications;
    options.seed = derive_seed(config.seed, 1);
    options.robust = config.robust;
    options.threads = config.threads;

    std::vector<fs::path> artifacts;
    auto emit = [&](const ExperimentReport& report) {
        const fs::path path = config.output / ("experiment_" + report.name + ".csv");
        write_experiment_csv(report, path);
        artifacts.push_back(path);
    };
    const bool all = spec.name == "all";
    if (all || spec.name == "convergence") {
        emit(convergence_experiment(cov, spec.horizon, options, {ActionSource::robust, ActionSource::plugin}));
    }
    if (all || spec.name == "tail") {
        options.seed = derive_seed(config.seed, 2);
        emit(tail_experiment(HeavyMixtureSpec::from_covariance(cov, spec.p_heavy), spec.horizon, options));
    }
    if (all || spec.name == "contamination") {
        options.seed = derive_seed(config.seed, 3);
        const auto report = contamination_experiment(cov, spec.horizon, options);
        emit(report.contaminated);
        emit(report.clean);
    }
    return finish(config, artifacts, ok);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust minimum-variance portfolios: backtests, estimates and simulations", "rgmv"};
    app.set_version_flag("--version", "rgmv 1.0.0");
    std::string config_path, input, output, strategies, mode;
    std::optional<Index> window;
    std::optional<double> cost;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--input", input, "price CSV (date column then one column per ticker)");
    app.add_option("--out", output, "output directory");
    app.add_option("--window", window, "estimation window length in trading days");
    app.add_option("--cost", cost, "proportional transaction cost rate");
    app.add_option("--strategies", strategies, "comma-separated strategy names");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--mode", mode, "covariance action estimator: robust or plugin");
    auto* backtest = app.add_subcommand("backtest", "rolling-window backtest of the selected strategies");
    auto* simulate = app.add_subcommand("simulate", "synthetic experiments writing risk curves");
    auto* estimate = app.add_subcommand("estimate", "single-window robust GMV weights");
    for (auto* sub : {backtest, simulate, estimate}) sub->fallthrough();
    app.require_subcommand(0, 1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << app.version() << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    RunConfig config;
    try {
        json doc = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("config: cannot open " + config_path);
            try {
                doc = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ConfigError("config: " + config_path + " is not valid JSON: " + e.what());
            }
        }
        config = run_config_from_json(doc);
        if (*backtest) config.command = Command::backtest;
        if (*simulate) config.command = Command::simulate;
        if (*estimate) config.command = Command::estimate;
        if (!input.empty()) config.input = input;
        if (!output.empty()) config.output = output;
        if (window) config.window = *window;
        if (cost) config.cost = *cost;
        if (!strategies.empty()) {
            config.strategies.clear();
            std::stringstream list(strategies);
            for (std::string name; std::getline(list, name, ',');) {
                if (!name.empty()) config.strategies.push_back(name);
            }
        }
        if (!mode.empty()) config.estimator = parse_estimator_mode(mode);
        if (seed) {
            // A flag seed reseeds nested configs unless the file pinned them.
            const bool pin_robust = doc.contains("robust") && doc["robust"].contains("seed");
            const bool pin_pgd = doc.contains("pgd") && doc["pgd"].contains("seed");
            config.seed = *seed;
            if (!pin_robust) config.robust.seed = *seed;
            if (!pin_pgd) config.pgd.seed = *seed;
        }
        config.validate();
        prepare_output(config.output);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }

    try {
        switch (config.command) {
            case Command::backtest: return cmd_backtest(config, err);
            case Command::simulate: return cmd_simulate(config, err);
            case Command::estimate: return cmd_estimate(config, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return strategy_error;
    }
    return ok;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace rgmv::cli
