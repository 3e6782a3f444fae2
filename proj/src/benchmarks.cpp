#include "rgmv/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "rgmv/errors.hpp"
#include "rgmv/linalg.hpp"

namespace rgmv {

StrategyKind parse_strategy_kind(std::string_view name) {
    if (name == "ew") return StrategyKind::ew;
    if (name == "gmv") return StrategyKind::gmv_sample;
    if (name == "gmv_long") return StrategyKind::gmv_long;
    if (name == "gmv_lin") return StrategyKind::gmv_lin;
    if (name == "gmv_nlin") return StrategyKind::gmv_nlin;
    if (name == "gmv_robust") return StrategyKind::gmv_robust;
    throw ConfigError("strategies: unknown strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::ew: return "ew";
        case StrategyKind::gmv_sample: return "gmv";
        case StrategyKind::gmv_long: return "gmv_long";
        case StrategyKind::gmv_lin: return "gmv_lin";
        case StrategyKind::gmv_nlin: return "gmv_nlin";
        case StrategyKind::gmv_robust: return "gmv_robust";
    }
    return "unknown";
}

WeightVector ew_weights(Index n) {
    if (n < 1) throw std::invalid_argument("EW needs at least one asset");
    return WeightVector(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

WeightVector sample_gmv(const CovEstimate& cov) {
    const Index n = cov.dimension();
    if (n < 1) throw std::invalid_argument("empty covariance");
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov.matrix, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    const double rcond = top > 0.0 ? eig.eigenvalues().minCoeff() / top : 0.0;
    if (eig.info() != Eigen::Success || !(rcond >= 1e-12)) {
        throw NumericalError("sample covariance is singular or near-singular (reciprocal condition " +
                             std::to_string(rcond) + "); GMV is undefined");
    }
    const Eigen::LDLT<MatrixXd> ldlt(cov.matrix);
    const VectorXd x = ldlt.solve(VectorXd::Ones(n));
    return WeightVector(x / x.sum(), 1e-9);
}

WeightVector project_simplex(const VectorXd& x) {
    const Index n = x.size();
    if (n == 0) throw std::invalid_argument("cannot project an empty vector");
    if (!x.allFinite()) throw std::invalid_argument("simplex projection of a non-finite vector");
    std::vector<double> sorted(x.data(), x.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double tau = 0.0;
    for (Index j = 0; j < n; ++j) {
        cumulative += sorted[static_cast<std::size_t>(j)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (sorted[static_cast<std::size_t>(j)] - candidate > 0.0) tau = candidate;
    }
    VectorXd w = (x.array() - tau).cwiseMax(0.0);
    w /= w.sum();
    return WeightVector(std::move(w), 1e-9);
}

WeightVector gmv_long(const CovEstimate& cov, int steps, std::uint64_t seed) {
    const Index n = cov.dimension();
    if (n < 1) throw std::invalid_argument("empty covariance");
    if (steps < 1) throw std::invalid_argument("gmv_long needs at least one step");
    const MatrixXd& sigma = cov.matrix;
    const ActionFn action = [&sigma](const VectorXd& v) { return VectorXd(sigma * v); };
    VectorXd w = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (sigma.cwiseAbs().maxCoeff() == 0.0) return WeightVector(w);
    const double eta = 1.0 / (1.05 * power_iteration(action, n, 30, seed).eigenvalue);
    for (int s = 0; s < steps; ++s) {
        w = project_simplex(w - eta * (sigma * w)).values();
    }
    return WeightVector(std::move(w), 1e-9);
}

ShrinkageResult linear_shrinkage(const CovEstimate& cov, const MatrixXd& sample,
                                 std::optional<double> forced_intensity) {
    const Index n = cov.dimension();
    const Index t = sample.rows();
    if (t < 2) throw DataError("linear shrinkage needs at least two observations");
    if (sample.cols() != n) throw std::invalid_argument("sample and covariance dimensions differ");
    const MatrixXd& s = cov.matrix;
    const double mu = s.trace() / static_cast<double>(n);

    double rho = 0.0;
    if (forced_intensity) {
        if (!(*forced_intensity >= 0.0 && *forced_intensity <= 1.0)) {
            throw std::invalid_argument("shrinkage intensity must lie in [0, 1]");
        }
        rho = *forced_intensity;
    } else {
        const double dispersion = (s - mu * MatrixXd::Identity(n, n)).squaredNorm();
        if (dispersion > 0.0) {
            const VectorXd mean = sample.colwise().mean();
            const MatrixXd x = sample.rowwise() - mean.transpose();
            const double s_norm_sq = s.squaredNorm();
            // ||x x' - S||_F^2 = ||x||^4 - 2 x'Sx + ||S||_F^2
            const VectorXd norms_sq = x.rowwise().squaredNorm();
            const VectorXd quad = ((x * s).cwiseProduct(x)).rowwise().sum();
            const double total = (norms_sq.cwiseAbs2() - 2.0 * quad).sum() + static_cast<double>(t) * s_norm_sq;
            const double beta = total / (static_cast<double>(t) * static_cast<double>(t));
            rho = std::clamp(beta / dispersion, 0.0, 1.0);
        }
    }
    MatrixXd shrunk = (1.0 - rho) * s;
    shrunk.diagonal().array() += rho * mu;
    return {CovEstimate(std::move(shrunk), CovKind::linear_shrinkage), rho, mu};
}

WeightVector Strategy::fit(const MatrixXd& window) const {
    switch (kind) {
        case StrategyKind::ew:
            return ew_weights(window.cols());
        case StrategyKind::gmv_sample:
            return sample_gmv(sample_covariance(window));
        case StrategyKind::gmv_long:
            return gmv_long(sample_covariance(window), long_only_steps, pgd.seed);
        case StrategyKind::gmv_lin: {
            const CovEstimate cov = sample_covariance(window);
            return sample_gmv(linear_shrinkage(cov, window).cov);
        }
        case StrategyKind::gmv_nlin:
            throw NotImplementedError("gmv_nlin (nonlinear shrinkage) is not provided");
        case StrategyKind::gmv_robust: {
            const auto action = ActionEstimator::robust(window, robust);
            PgdConfig config = pgd;
            config.mode = PgdMode::gmv;
            config.record_path = false;
            return gmv_pgd(action, config).final_weights();
        }
    }
    throw std::logic_error("unhandled strategy kind");
}

}  // namespace rgmv
