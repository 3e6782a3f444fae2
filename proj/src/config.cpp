#include "rgmv/config.hpp"

#include <algorithm>
#include <set>

#include "rgmv/benchmarks.hpp"
#include "rgmv/errors.hpp"

namespace rgmv {

using nlohmann::json;

namespace {

// Typed access to one JSON object; rejects unknown keys and wrong types.
class Fields {
public:
    Fields(const json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
        if (!doc_.is_object()) throw ConfigError(label() + " must be a JSON object");
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& item : doc_.items()) {
            if (!known.count(item.key())) throw ConfigError(key(item.key()) + ": unknown field");
        }
    }

    bool has(const char* name) const { return doc_.contains(name); }
    bool is_null(const char* name) const { return doc_.contains(name) && doc_.at(name).is_null(); }

    const json* get(const char* name) const {
        auto it = doc_.find(name);
        return it == doc_.end() ? nullptr : &*it;
    }

    void read(const char* name, double& out) const {
        if (auto v = get(name)) {
            if (!v->is_number()) throw ConfigError(key(name) + " must be a number");
            out = v->get<double>();
        }
    }

    template <class Int>
    void read_int(const char* name, Int& out) const {
        if (auto v = get(name)) {
            if (!v->is_number_integer()) throw ConfigError(key(name) + " must be an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = static_cast<Int>(v->get<std::uint64_t>());
                } else if (v->get<std::int64_t>() >= 0) {
                    out = static_cast<Int>(v->get<std::int64_t>());
                } else {
                    throw ConfigError(key(name) + " must be non-negative");
                }
            } else {
                out = static_cast<Int>(v->get<std::int64_t>());
            }
        }
    }

    void read(const char* name, std::string& out) const {
        if (auto v = get(name)) {
            if (!v->is_string()) throw ConfigError(key(name) + " must be a string");
            out = v->get<std::string>();
        }
    }

    // Absent keeps the default, null clears it.
    template <class T>
    void read_optional(const char* name, std::optional<T>& out) const {
        if (!has(name)) return;
        if (is_null(name)) {
            out.reset();
            return;
        }
        T value{};
        if constexpr (std::is_integral_v<T>) {
            read_int(name, value);
        } else {
            read(name, value);
        }
        out = value;
    }

    const json& sub(const char* name) const { return doc_.at(name); }
    std::string key(const std::string& name) const { return prefix_.empty() ? name : prefix_ + "." + name; }

private:
    std::string label() const { return prefix_.empty() ? "config" : prefix_; }

    const json& doc_;
    std::string prefix_;
};

template <class T>
json optional_json(const std::optional<T>& value) {
    return value ? json(*value) : json(nullptr);
}

}  // namespace

std::string_view to_string(Command command) {
    switch (command) {
        case Command::backtest: return "backtest";
        case Command::simulate: return "simulate";
        case Command::estimate: return "estimate";
    }
    return "backtest";
}

Command parse_command(std::string_view text) {
    if (text == "backtest") return Command::backtest;
    if (text == "simulate") return Command::simulate;
    if (text == "estimate") return Command::estimate;
    throw ConfigError("command: unknown command '" + std::string(text) + "'");
}

std::string_view to_string(EstimatorMode mode) { return mode == EstimatorMode::robust ? "robust" : "plugin"; }

EstimatorMode parse_estimator_mode(std::string_view text) {
    if (text == "robust") return EstimatorMode::robust;
    if (text == "plugin" || text == "plug-in") return EstimatorMode::plugin;
    throw ConfigError("mode: expected 'robust' or 'plugin', got '" + std::string(text) + "'");
}

void ExperimentSpec::validate() const {
    static const std::set<std::string> names{"tail", "convergence", "contamination", "all"};
    if (!names.count(name)) throw ConfigError("experiment.name: unknown experiment '" + name + "'");
    if (assets < 2) throw ConfigError("experiment.assets must be at least 2");
    if (horizon < 2) throw ConfigError("experiment.horizon must be at least 2");
    if (steps < 1) throw ConfigError("experiment.steps must be at least 1");
    if (replications < 1) throw ConfigError("experiment.replications must be at least 1");
    if (!(p_heavy >= 0.0 && p_heavy < 1.0)) throw ConfigError("experiment.p_heavy must lie in [0, 1)");
    if (!(effective_rank > 1.0 && effective_rank < static_cast<double>(assets))) {
        throw ConfigError("experiment.effective_rank must lie in (1, assets)");
    }
    if (benign_span < 1 || benign_span > assets) throw ConfigError("experiment.benign_span must lie in [1, assets]");
}

void RunConfig::validate() const {
    if (window < 2) throw ConfigError("window must be at least 2");
    if (!(cost >= 0.0) || !std::isfinite(cost)) throw ConfigError("cost must be non-negative");
    if (command == Command::backtest && strategies.empty()) {
        throw ConfigError("strategies must list at least one strategy");
    }
    for (const auto& s : strategies) parse_strategy_kind(s);
    robust.validate();
    pgd.validate();
    if (!(pgd.gamma > 0.0)) throw ConfigError("pgd.gamma must be positive");
    experiment.validate();
    if (command != Command::simulate && input.empty()) throw ConfigError("input: a price CSV is required");
    if (output.empty()) throw ConfigError("output: an output directory is required");
}

BacktestConfig RunConfig::backtest_config() const {
    BacktestConfig out;
    out.window_length = window;
    out.cost_rate = cost;
    out.threads = threads;
    for (const auto& name : strategies) {
        Strategy s;
        s.kind = parse_strategy_kind(name);
        s.robust = robust;
        s.pgd = pgd;
        out.strategies.push_back(s);
    }
    return out;
}

RobustConfig robust_config_from_json(const json& doc, std::uint64_t default_seed) {
    RobustConfig out;
    out.seed = default_seed;
    Fields f(doc, "robust");
    f.allow_only({"epsilon", "delta", "buckets", "truncation_scale", "center_iterations", "seed"});
    f.read("epsilon", out.epsilon);
    f.read("delta", out.delta);
    f.read_optional("buckets", out.buckets);
    f.read("truncation_scale", out.truncation_scale);
    f.read_int("center_iterations", out.center_iterations);
    f.read_int("seed", out.seed);
    out.validate();
    return out;
}

json to_json(const RobustConfig& config) {
    return json{{"epsilon", config.epsilon},
                {"delta", config.delta},
                {"buckets", optional_json(config.buckets)},
                {"truncation_scale", config.truncation_scale},
                {"center_iterations", config.center_iterations},
                {"seed", config.seed}};
}

PgdConfig pgd_config_from_json(const json& doc, std::uint64_t default_seed) {
    PgdConfig out;
    out.seed = default_seed;
    Fields f(doc, "pgd");
    f.allow_only({"mode", "eta", "steps", "gamma", "delta", "seed"});
    std::string mode(to_string(out.mode));
    f.read("mode", mode);
    if (mode == "gmv") {
        out.mode = PgdMode::gmv;
    } else if (mode == "mv") {
        out.mode = PgdMode::mv;
    } else {
        throw ConfigError("pgd.mode: expected 'gmv' or 'mv', got '" + mode + "'");
    }
    f.read_optional("eta", out.eta);
    f.read_optional("steps", out.steps);
    f.read("gamma", out.gamma);
    f.read("delta", out.delta);
    f.read_int("seed", out.seed);
    if (!(out.gamma > 0.0)) throw ConfigError("pgd.gamma must be positive");
    if (!(out.delta > 0.0 && out.delta < 1.0)) throw ConfigError("pgd.delta must lie in (0, 1)");
    out.validate();
    return out;
}

json to_json(const PgdConfig& config) {
    return json{{"mode", std::string(to_string(config.mode))},
                {"eta", optional_json(config.eta)},
                {"steps", optional_json(config.steps)},
                {"gamma", config.gamma},
                {"delta", config.delta},
                {"seed", config.seed}};
}

RunConfig run_config_from_json(const json& doc) {
    RunConfig out;
    Fields f(doc, "");
    f.allow_only({"command", "input", "output", "window", "cost", "strategies", "estimator", "robust", "pgd",
                  "experiment", "seed", "threads"});
    std::string text(to_string(out.command));
    f.read("command", text);
    out.command = parse_command(text);
    std::string path;
    f.read("input", path);
    out.input = path;
    path = out.output.string();
    f.read("output", path);
    out.output = path;
    f.read_int("window", out.window);
    f.read("cost", out.cost);
    if (auto v = f.get("strategies")) {
        if (!v->is_array()) throw ConfigError("strategies must be an array of names");
        out.strategies.clear();
        for (const auto& item : *v) {
            if (!item.is_string()) throw ConfigError("strategies must be an array of names");
            out.strategies.push_back(item.get<std::string>());
        }
    }
    text = std::string(to_string(out.estimator));
    f.read("estimator", text);
    out.estimator = parse_estimator_mode(text);
    f.read_int("seed", out.seed);
    f.read_int("threads", out.threads);

    out.robust = f.has("robust") ? robust_config_from_json(f.sub("robust"), out.seed) : RobustConfig{};
    if (!f.has("robust")) out.robust.seed = out.seed;
    out.pgd = f.has("pgd") ? pgd_config_from_json(f.sub("pgd"), out.seed) : PgdConfig{};
    if (!f.has("pgd")) out.pgd.seed = out.seed;

    if (f.has("experiment")) {
        Fields e(f.sub("experiment"), "experiment");
        e.allow_only({"name", "assets", "horizon", "steps", "replications", "p_heavy", "effective_rank",
                      "benign_span"});
        e.read("name", out.experiment.name);
        e.read_int("assets", out.experiment.assets);
        e.read_int("horizon", out.experiment.horizon);
        e.read_int("steps", out.experiment.steps);
        e.read_int("replications", out.experiment.replications);
        e.read("p_heavy", out.experiment.p_heavy);
        e.read("effective_rank", out.experiment.effective_rank);
        e.read_int("benign_span", out.experiment.benign_span);
    }
    return out;
}

json to_json(const RunConfig& config) {
    const auto& e = config.experiment;
    return json{{"command", std::string(to_string(config.command))},
                {"input", config.input.string()},
                {"output", config.output.string()},
                {"window", config.window},
                {"cost", config.cost},
                {"strategies", config.strategies},
                {"estimator", std::string(to_string(config.estimator))},
                {"robust", to_json(config.robust)},
                {"pgd", to_json(config.pgd)},
                {"experiment",
                 {{"name", e.name},
                  {"assets", e.assets},
                  {"horizon", e.horizon},
                  {"steps", e.steps},
                  {"replications", e.replications},
                  {"p_heavy", e.p_heavy},
                  {"effective_rank", e.effective_rank},
                  {"benign_span", e.benign_span}}},
                {"seed", config.seed},
                {"threads", config.threads}};
}

}  // namespace rgmv
