#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rgmv/gmv_pgd.hpp"
#include "rgmv/market_data.hpp"
#include "rgmv/robust_core.hpp"

namespace rgmv {

enum class StrategyKind { ew, gmv_sample, gmv_long, gmv_lin, gmv_nlin, gmv_robust };

/// Accepts the registry names ew, gmv, gmv_long, gmv_lin, gmv_nlin, gmv_robust.
StrategyKind parse_strategy_kind(std::string_view name);
std::string_view strategy_name(StrategyKind kind);

WeightVector ew_weights(Index n);

/// Sigma^-1 1 / (1' Sigma^-1 1); throws NumericalError when the covariance
/// is singular or lambda_min / lambda_max is below 1e-12.
WeightVector sample_gmv(const CovEstimate& cov);

/// Euclidean projection onto the probability simplex (sort and threshold).
WeightVector project_simplex(const VectorXd& x);

/// Long-only GMV by projected gradient with simplex projection from EW.
WeightVector gmv_long(const CovEstimate& cov, int steps = 10'000, std::uint64_t seed = 0);

struct ShrinkageResult {
    CovEstimate cov;
    double intensity = 0.0;     // rho in [0, 1]
    double target_scale = 0.0;  // mu = Tr(Sigma_hat) / N
};

/// rho mu I + (1 - rho) Sigma_hat with the Ledoit-Wolf plug-in intensity,
/// unless `forced_intensity` fixes rho.
ShrinkageResult linear_shrinkage(const CovEstimate& cov, const MatrixXd& sample,
                                 std::optional<double> forced_intensity = std::nullopt);

/// A registered allocation rule plus the options it needs to fit one window.
struct Strategy {
    StrategyKind kind = StrategyKind::ew;
    RobustConfig robust;
    PgdConfig pgd;
    int long_only_steps = 10'000;

    std::string name() const { return std::string(strategy_name(kind)); }
    /// Weights from one estimation window (rows = days).
    WeightVector fit(const MatrixXd& window) const;
};

}  // namespace rgmv
