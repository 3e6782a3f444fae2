#pragma once

// Median-of-means estimation of the covariance action w -> Sigma w and of
// the mean, built from bucket means combined through a spectral center.

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "rgmv/market_data.hpp"

namespace rgmv {

struct RobustConfig {
    double epsilon = 1.0 / 3.0;      // spectral-center slack, in (0, 1/2)
    double delta = 0.05;             // failure probability, in (0, 1)
    std::optional<int> buckets = 10; // nullopt selects the theoretical count
    double truncation_scale = 10.0;  // multiplier on the theoretical norm truncation
    int center_iterations = 20;
    std::uint64_t seed = 0;          // power-iteration start for spectrum plug-ins

    void validate() const;
};

/// Pairwise differences (X_{2i-1} - X_{2i}) / sqrt(2); an odd last row is dropped.
MatrixXd centralize_pairs(const MatrixXd& sample);

/// ceil(2 (epsilon/10)^-2 ln(2/delta)), never below 2.
int bucket_count(double epsilon, double delta);

/// The override when present, otherwise bucket_count(epsilon, delta).
int resolve_bucket_count(const RobustConfig& config);

/// scale * ||Sigma||^{1/2} * (T r / ln max(r, e))^{1/4}.
double truncation_level(double top_eigenvalue, double effective_rank, double sample_size,
                        double scale = 1.0);

/// Plug-in spectrum statistics used by truncation and stopping rules.
struct SpectrumSummary {
    double top_eigenvalue = 0.0;
    double trace = 0.0;
    Index sample_size = 0;

    double effective_rank() const { return trace / top_eigenvalue; }
};

/// Split [0, count) into `buckets` contiguous blocks whose sizes differ by at
/// most one; returns the buckets + 1 block boundaries.
std::vector<Index> contiguous_buckets(Index count, Index buckets);

/// Centered pairs split into contiguous buckets, with the norm-truncation mask.
class BucketedSample {
public:
    BucketedSample(const MatrixXd& sample, const RobustConfig& config);

    const MatrixXd& centered() const { return centered_; }
    Index buckets() const { return static_cast<Index>(offsets_.size()) - 1; }
    Index bucket_begin(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
    Index bucket_end(Index j) const { return offsets_[static_cast<std::size_t>(j) + 1]; }
    double truncation() const { return truncation_; }
    /// 1 where ||X~_i|| <= D, 0 where the pair is truncated.
    const VectorXd& kept() const { return kept_; }
    const SpectrumSummary& spectrum() const { return spectrum_; }

private:
    MatrixXd centered_;
    std::vector<Index> offsets_;
    VectorXd kept_;
    double truncation_ = 0.0;
    SpectrumSummary spectrum_;
};

/// Rows Y_j = |B_j|^-1 sum_{i in B_j} (X~_i' w) X~_i 1[||X~_i|| <= D].
/// Never forms an N x N matrix.
MatrixXd bucket_action_means(const BucketedSample& bucketed, const VectorXd& w);

struct SpectralCenterResult {
    VectorXd center;
    VectorXd weights;             // in Delta_{l, epsilon}
    double radius_squared = 0.0;  // top eigenvalue of sum u_j (Y_j - c)(Y_j - c)'
    double initial_radius_squared = 0.0;
    int best_round = 0;
};

/// Capped water-filling: weight 1/(l(1 - epsilon)) on the smallest scores,
/// the remainder on the next one, zero elsewhere. Ties (scores equal to a
/// relative 1e-10) go to the lower index.
VectorXd capped_weights(const VectorXd& scores, double epsilon);

/// Top eigenvalue (and optionally eigenvector) of sum_j u_j (Y_j - c)(Y_j - c)'
/// for points stored as rows, via the l x l Gram matrix.
double weighted_spread(const MatrixXd& points, const VectorXd& weights, const VectorXd& center,
                       VectorXd* direction = nullptr);

/// Alternating reweighing heuristic for a spectral center of the rows of
/// `points`. The result is a weighted mean under weights in Delta_{l, eps}
/// whose spread never exceeds the one obtained from the coordinate-wise
/// median start.
SpectralCenterResult spectral_center(const MatrixXd& points, double epsilon, int iterations);

/// True when, for every supplied unit direction v, |v'(Y_j - theta)| <= r
/// holds for at least (1 - kappa) l indices.
bool is_combinatorial_center(const VectorXd& theta, const MatrixXd& points, double r, double kappa,
                             const std::vector<VectorXd>& directions);

enum class EstimatorMode { robust, plugin };

/// Estimate of the covariance action w -> Sigma w. Immutable and cheap to
/// copy; safe to evaluate concurrently.
class ActionEstimator {
public:
    /// Median-of-means estimator over the rows of `sample`.
    static ActionEstimator robust(const MatrixXd& sample, const RobustConfig& config = {});
    /// w -> cov w. `sample_size` enables the automatic stopping rule.
    static ActionEstimator plugin(CovEstimate cov, std::optional<Index> sample_size = std::nullopt);
    /// Plug-in action of the sample covariance of `sample`.
    static ActionEstimator plugin_from_sample(const MatrixXd& sample);

    VectorXd operator()(const VectorXd& w) const;
    /// Robust mode only: the full spectral-center result at w.
    SpectralCenterResult evaluate_detailed(const VectorXd& w) const;

    EstimatorMode mode() const { return mode_; }
    Index dimension() const { return dimension_; }
    const RobustConfig& config() const { return config_; }
    const BucketedSample* bucketed() const { return bucketed_.get(); }
    const CovEstimate* covariance() const { return cov_.get(); }
    /// Spectrum plug-ins; empty for an exact action with no sample size.
    const std::optional<SpectrumSummary>& spectrum() const { return spectrum_; }

private:
    EstimatorMode mode_ = EstimatorMode::plugin;
    Index dimension_ = 0;
    RobustConfig config_;
    std::shared_ptr<const BucketedSample> bucketed_;
    std::shared_ptr<const CovEstimate> cov_;
    std::optional<SpectrumSummary> spectrum_;
};

/// Free-function spelling of est(w).
VectorXd robust_action(const ActionEstimator& est, const VectorXd& w);

/// Spectral center of the bucket means of the raw rows of `sample`.
VectorXd robust_mean(const MatrixXd& sample, const RobustConfig& config = {});

}  // namespace rgmv
