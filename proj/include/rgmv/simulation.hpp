#pragma once

// Synthetic return generators and the simulation experiments comparing the
// robust and plug-in covariance actions inside GMV gradient descent.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgmv/gmv_pgd.hpp"
#include "rgmv/market_data.hpp"
#include "rgmv/rng.hpp"
#include "rgmv/robust_core.hpp"

namespace rgmv {

/// T x N matrix with rows i.i.d. N(0, cov), via the symmetric square root.
MatrixXd sample_gaussian(const CovEstimate& cov, Index rows, std::uint64_t seed);

/// Z in {-1, 1}^N: draw k uniform in {0..N}, a uniform size-k subset B, and
/// set Z_i = 1 on B, -1 elsewhere.
VectorXd sample_rademacher_subset(Index n, Philox4x32& rng);
VectorXd sample_rademacher_subset(Index n, std::uint64_t seed);

/// X = S^{1/2} Y with Y ~ (1 - p) N(0, I) + p D.
struct HeavyMixtureSpec {
    MatrixXd cov_sqrt;
    double p_heavy = 0.001;

    static HeavyMixtureSpec from_covariance(const CovEstimate& cov, double p_heavy = 0.001);

    Index dimension() const { return cov_sqrt.rows(); }
    void validate() const;
    /// (1 - p) I + p ((2/3) I + (1/3) 11'), the covariance of Y.
    MatrixXd middle_matrix() const;
    /// S^{1/2} middle S^{1/2}.
    MatrixXd population_covariance() const;
};

struct HeavyMixtureSample {
    MatrixXd data;
    std::vector<Index> heavy_rows;
};

HeavyMixtureSample sample_heavy_mixture_detailed(const HeavyMixtureSpec& spec, Index rows, std::uint64_t seed);
MatrixXd sample_heavy_mixture(const HeavyMixtureSpec& spec, Index rows, std::uint64_t seed);

struct BenignRotation {
    MatrixXd rotation;  // orthogonal R
    CovEstimate rotated;  // R S1 R'
    double residual = 0.0;  // distance of 1/sqrt(N) from the top-m span of the result
};

/// Rotates S1 by a single plane rotation so that the ones vector lies in the
/// span of the top `top_count` eigenvectors of R S1 R'.
BenignRotation rotate_for_benign_optimum(const CovEstimate& s1, Index top_count = 15);

/// Covariance with eigenvalues k^-alpha (alpha tuned to the requested
/// effective rank), a market-like top eigenvector with heterogeneous positive
/// loadings and a random orthogonal complement.
CovEstimate synthetic_market_covariance(Index n, double effective_rank, std::uint64_t seed,
                                        double scale = 1.0);

/// Distance of 1/sqrt(N) from the span of the top `top_count` eigenvectors.
double ones_residual(const MatrixXd& cov, Index top_count);

enum class ActionSource { robust, plugin, exact };

/// Per-replication population and in-sample risk along the PGD trace
/// (rows = replications, columns = steps 0..S).
struct RiskCurves {
    MatrixXd population;
    MatrixXd in_sample;
    std::vector<double> step_sizes;

    VectorXd mean_population() const;
    VectorXd quantile_population(double p) const;
    VectorXd mean_in_sample() const;
};

struct ExperimentReport {
    std::string name;
    int replications = 0;
    int steps = 0;
    std::uint64_t seed = 0;
    std::optional<RiskCurves> robust;
    std::optional<RiskCurves> plugin;
    std::optional<RiskCurves> exact;

    const RiskCurves& curves(ActionSource source) const;
};

struct ExperimentOptions {
    int steps = 100;
    int replications = 200;
    std::uint64_t seed = 0;
    RobustConfig robust;
    unsigned threads = 0;
};

/// Gaussian samples from `cov`; runs the selected action(s) and records the
/// population risk against `cov` and in-sample risk against the sample
/// covariance (against `cov` itself for the exact action).
ExperimentReport convergence_experiment(const CovEstimate& cov, Index rows, const ExperimentOptions& options,
                                        const std::vector<ActionSource>& sources);

/// Heavy-mixture samples; robust and plug-in runs consume identical samples.
ExperimentReport tail_experiment(const HeavyMixtureSpec& spec, Index rows, const ExperimentOptions& options);

struct ContaminationReport {
    ExperimentReport contaminated;  // one replication, both modes
    ExperimentReport clean;         // same Gaussian sample without replacement
    VectorXd replacement;           // the row written over the first observation
};

/// One Gaussian sample whose first row is replaced by S^{1/2} Z (or by
/// `replacement` when given); risks are measured against `cov`.
ContaminationReport contamination_experiment(const CovEstimate& cov, Index rows, const ExperimentOptions& options,
                                             const std::optional<VectorXd>& replacement = std::nullopt);

/// Type-7 (linear interpolation) empirical quantile.
double empirical_quantile(std::vector<double> values, double p);

/// Index of the smallest entry (first on ties).
Index argmin_step(const VectorXd& curve);

/// One row per step 1..S: step, mean_risk_robust, q95_risk_robust, mean_risk_plugin, q95_risk_plugin, mean_insample.
void write_experiment_csv(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace rgmv
