#include "rgmv/gmv_pgd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rgmv/errors.hpp"
#include "rgmv/linalg.hpp"

namespace rgmv {

namespace {

constexpr double kStepSafety = 1.05;
constexpr int kPowerSteps = 30;
constexpr int kMaxSteps = 1'000'000;
constexpr double kDivergenceFactor = 1e6;

PgdTrace run_pgd(const ActionEstimator& action, const PgdConfig& config, const VectorXd* mean) {
    config.validate();
    const Index n = action.dimension();
    if (n < 1) throw std::invalid_argument("PGD needs at least one asset");
    const double gamma = mean ? config.gamma : 1.0;

    PgdTrace trace;
    trace.eta = config.eta ? *config.eta : estimate_step_size(action, config.seed) / gamma;
    if (config.steps) {
        trace.steps = *config.steps;
    } else {
        // The stopping rule is stated for the product gamma * eta.
        trace.steps = default_step_count(action, trace.eta * gamma, config.delta);
    }

    VectorXd w = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const double limit = kDivergenceFactor * w.norm();
    auto record = [&](const VectorXd& x, const VectorXd& ax) {
        trace.path.push_back(x);
        trace.in_sample_risk.push_back(0.5 * x.dot(ax));
    };

    VectorXd aw = action(w);
    if (config.record_path) record(w, aw);
    for (int s = 1; s <= trace.steps; ++s) {
        VectorXd gradient = gamma * aw;
        if (mean) gradient -= *mean;
        w = project_sum_one_raw(w - trace.eta * gradient);
        if (!w.allFinite()) throw NumericalError("PGD produced a non-finite iterate at step " + std::to_string(s));
        if (w.norm() > limit) {
            throw NumericalError("PGD diverged at step " + std::to_string(s) + "; step size too large");
        }
        aw = action(w);
        if (config.record_path) record(w, aw);
    }
    if (!config.record_path) record(w, aw);
    return trace;
}

}  // namespace

WeightVector::WeightVector(VectorXd weights, double tol) : weights_(std::move(weights)) {
    if (weights_.size() == 0) throw std::invalid_argument("weight vector is empty");
    if (!weights_.allFinite()) throw std::invalid_argument("weight vector has non-finite components");
    if (std::abs(weights_.sum() - 1.0) > tol) {
        throw std::invalid_argument("weights must sum to one (sum = " + std::to_string(weights_.sum()) + ")");
    }
}

std::string_view to_string(PgdMode mode) { return mode == PgdMode::gmv ? "gmv" : "mv"; }

void PgdConfig::validate() const {
    if (eta && !(*eta > 0.0)) throw ConfigError("pgd.eta must be positive");
    if (steps && *steps < 1) throw ConfigError("pgd.steps must be at least 1");
    if (steps && *steps > kMaxSteps) throw ConfigError("pgd.steps must not exceed 1000000");
    if (mode == PgdMode::mv && !(gamma > 0.0)) throw ConfigError("pgd.gamma must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("pgd.delta must lie in (0, 1)");
}

VectorXd project_sum_one_raw(const VectorXd& x) {
    const double n = static_cast<double>(x.size());
    VectorXd y = x.array() - (x.sum() - 1.0) / n;
    // Second pass removes rounding drift in the sum.
    y.array() -= (y.sum() - 1.0) / n;
    return y;
}

WeightVector project_sum_one(const VectorXd& x) {
    if (x.size() == 0) throw std::invalid_argument("cannot project an empty vector");
    return WeightVector(project_sum_one_raw(x), 1e-9);
}

double estimate_step_size(const ActionEstimator& action, std::uint64_t seed) {
    const ActionFn fn = [&action](const VectorXd& v) { return action(v); };
    const double lambda = power_iteration(fn, action.dimension(), kPowerSteps, seed).eigenvalue;
    return 1.0 / (kStepSafety * lambda);
}

double plugin_delta_sigma(double top_eigenvalue, double effective_rank, double sample_size, double delta) {
    const double log_rank = std::log(std::max(effective_rank, std::exp(1.0)));
    return top_eigenvalue * std::sqrt((effective_rank * log_rank + std::log(1.0 / delta)) / sample_size);
}

int default_step_count(double eta, double delta_sigma) {
    const double product = eta * delta_sigma;
    if (!(product > 0.0) || !std::isfinite(product)) return kMaxSteps;
    const double raw = std::ceil(1.0 / product);
    return static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(kMaxSteps)));
}

int default_step_count(const ActionEstimator& action, double eta, double delta) {
    const auto& spectrum = action.spectrum();
    if (!spectrum || spectrum->sample_size < 2 || !(spectrum->top_eigenvalue > 0.0)) {
        throw ConfigError("pgd.steps must be set: the action carries no sample spectrum for the stopping rule");
    }
    const double ds = plugin_delta_sigma(spectrum->top_eigenvalue, spectrum->effective_rank(),
                                         static_cast<double>(spectrum->sample_size), delta);
    return default_step_count(eta, ds);
}

PgdTrace gmv_pgd(const ActionEstimator& action, const PgdConfig& config) {
    if (config.mode != PgdMode::gmv) throw ConfigError("gmv_pgd requires pgd.mode = gmv");
    return run_pgd(action, config, nullptr);
}

PgdTrace mv_pgd(const VectorXd& mean, const ActionEstimator& action, const PgdConfig& config) {
    if (config.mode != PgdMode::mv) throw ConfigError("mv_pgd requires pgd.mode = mv");
    if (mean.size() != action.dimension()) throw std::invalid_argument("mean dimension mismatch");
    return run_pgd(action, config, &mean);
}

double risk(const VectorXd& w, const MatrixXd& cov) {
    if (cov.rows() != w.size() || cov.cols() != w.size()) throw std::invalid_argument("risk: dimension mismatch");
    return 0.5 * w.dot(cov * w);
}

double risk(const VectorXd& w, const CovEstimate& cov) { return risk(w, cov.matrix); }

double mv_utility(const VectorXd& w, const VectorXd& mean, const CovEstimate& cov, double gamma) {
    if (mean.size() != w.size()) throw std::invalid_argument("mv_utility: dimension mismatch");
    return mean.dot(w) - gamma * risk(w, cov);
}

VectorXd closed_form_gmv(const MatrixXd& cov) {
    const VectorXd x = cov.ldlt().solve(VectorXd::Ones(cov.rows()));
    return x / x.sum();
}

}  // namespace rgmv
