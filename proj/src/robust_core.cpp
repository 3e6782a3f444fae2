#include "rgmv/robust_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rgmv/errors.hpp"
#include "rgmv/linalg.hpp"

namespace rgmv {

namespace {

VectorXd coordinate_median(const MatrixXd& points) {
    const Index l = points.rows();
    VectorXd median(points.cols());
    std::vector<double> column(static_cast<std::size_t>(l));
    for (Index k = 0; k < points.cols(); ++k) {
        for (Index j = 0; j < l; ++j) column[static_cast<std::size_t>(j)] = points(j, k);
        const auto mid = column.begin() + l / 2;
        std::nth_element(column.begin(), mid, column.end());
        double value = *mid;
        if (l % 2 == 0) value = 0.5 * (value + *std::max_element(column.begin(), mid));
        median[k] = value;
    }
    return median;
}

void check_simplex_weights(const VectorXd& u, double epsilon) {
#ifdef RGMV_CHECK_INVARIANTS
    const double cap = 1.0 / (static_cast<double>(u.size()) * (1.0 - epsilon));
    if (std::abs(u.sum() - 1.0) > 1e-12 || u.minCoeff() < 0.0 || u.maxCoeff() > cap * (1.0 + 1e-12)) {
        throw std::logic_error("spectral-center weights left Delta_{l, epsilon}");
    }
#else
    (void)u;
    (void)epsilon;
#endif
}

}  // namespace

void RobustConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw ConfigError("robust.epsilon must lie in (0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("robust.delta must lie in (0, 1)");
    if (buckets && *buckets < 2) throw ConfigError("robust.buckets must be at least 2");
    if (!(truncation_scale > 0.0)) throw ConfigError("robust.truncation_scale must be positive");
    if (center_iterations < 1) throw ConfigError("robust.center_iterations must be at least 1");
}

MatrixXd centralize_pairs(const MatrixXd& sample) {
    if (sample.rows() < 2) throw DataError("pair differencing needs at least two observations");
    const Index pairs = sample.rows() / 2;
    MatrixXd out(pairs, sample.cols());
    const double scale = 1.0 / std::sqrt(2.0);
    for (Index i = 0; i < pairs; ++i) {
        out.row(i) = (sample.row(2 * i) - sample.row(2 * i + 1)) * scale;
    }
    return out;
}

int bucket_count(double epsilon, double delta) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    const double ratio = 10.0 / epsilon;
    const double raw = std::ceil(2.0 * ratio * ratio * std::log(2.0 / delta));
    return std::max(2, static_cast<int>(raw));
}

int resolve_bucket_count(const RobustConfig& config) {
    return config.buckets ? *config.buckets : bucket_count(config.epsilon, config.delta);
}

double truncation_level(double top_eigenvalue, double effective_rank, double sample_size, double scale) {
    if (!(top_eigenvalue > 0.0) || !(effective_rank > 0.0)) {
        throw NumericalError("truncation level needs a non-degenerate spectrum estimate");
    }
    if (sample_size < 2.0) throw std::invalid_argument("truncation level needs T >= 2");
    const double log_rank = std::log(std::max(effective_rank, std::exp(1.0)));
    return scale * std::sqrt(top_eigenvalue) * std::pow(sample_size * effective_rank / log_rank, 0.25);
}

std::vector<Index> contiguous_buckets(Index count, Index buckets) {
    if (buckets < 1 || count < buckets) {
        throw DataError("cannot split " + std::to_string(count) + " observations into " +
                        std::to_string(buckets) + " non-empty buckets");
    }
    std::vector<Index> offsets(static_cast<std::size_t>(buckets) + 1);
    const Index base = count / buckets;
    const Index extra = count % buckets;
    offsets[0] = 0;
    for (Index j = 0; j < buckets; ++j) {
        offsets[static_cast<std::size_t>(j) + 1] = offsets[static_cast<std::size_t>(j)] + base + (j < extra ? 1 : 0);
    }
    return offsets;
}

BucketedSample::BucketedSample(const MatrixXd& sample, const RobustConfig& config) {
    config.validate();
    centered_ = centralize_pairs(sample);
    const Index pairs = centered_.rows();
    offsets_ = contiguous_buckets(pairs, resolve_bucket_count(config));

    const VectorXd norms_sq = centered_.rowwise().squaredNorm();
    spectrum_.sample_size = sample.rows();
    spectrum_.trace = norms_sq.sum() / static_cast<double>(pairs);
    const MatrixXd& x = centered_;
    const double n = static_cast<double>(pairs);
    auto second_moment = [&x, n](const VectorXd& v) -> VectorXd { return x.transpose() * (x * v) / n; };
    if (spectrum_.trace > 0.0) {
        spectrum_.top_eigenvalue = power_iteration(second_moment, x.cols(), 50, config.seed).eigenvalue;
    }
    kept_ = VectorXd::Ones(pairs);
    if (spectrum_.top_eigenvalue > 0.0) {
        truncation_ = truncation_level(spectrum_.top_eigenvalue, spectrum_.effective_rank(),
                                       static_cast<double>(sample.rows()), config.truncation_scale);
        const double limit = truncation_ * truncation_;
        for (Index i = 0; i < pairs; ++i) kept_[i] = norms_sq[i] <= limit ? 1.0 : 0.0;
    } else {
        truncation_ = 0.0;  // all pairs are zero; nothing to truncate
    }
}

MatrixXd bucket_action_means(const BucketedSample& bucketed, const VectorXd& w) {
    const MatrixXd& x = bucketed.centered();
    if (w.size() != x.cols()) throw std::invalid_argument("weight dimension does not match the sample");
    const Index l = bucketed.buckets();
    MatrixXd means(l, x.cols());
    for (Index j = 0; j < l; ++j) {
        const Index begin = bucketed.bucket_begin(j);
        const Index size = bucketed.bucket_end(j) - begin;
        if (size == 0) throw DataError("empty bucket");
        const auto block = x.middleRows(begin, size);
        const VectorXd projections = (block * w).cwiseProduct(bucketed.kept().segment(begin, size));
        means.row(j) = (block.transpose() * projections).transpose() / static_cast<double>(size);
    }
    return means;
}

VectorXd capped_weights(const VectorXd& scores, double epsilon) {
    const Index l = scores.size();
    const double capacity = static_cast<double>(l) * (1.0 - epsilon);
    if (capacity < 1.0) throw std::invalid_argument("empty weight set: l (1 - epsilon) < 1");
    const double cap = 1.0 / capacity;
    std::vector<Index> order(static_cast<std::size_t>(l));
    std::iota(order.begin(), order.end(), Index{0});
    // Scores equal up to rounding count as ties (relative grid 1e-10 of the largest).
    const double top = scores.cwiseAbs().maxCoeff();
    const double quantum = top > 0.0 && std::isfinite(top) ? 1e-10 * top : 1.0;
    std::vector<double> keys(static_cast<std::size_t>(l));
    for (Index j = 0; j < l; ++j) keys[static_cast<std::size_t>(j)] = std::round(scores[j] / quantum);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return keys[static_cast<std::size_t>(a)] < keys[static_cast<std::size_t>(b)];
    });

    const auto full = std::min<Index>(l, static_cast<Index>(std::floor(capacity + 1e-12)));
    VectorXd u = VectorXd::Zero(l);
    const double remainder = 1.0 - static_cast<double>(full) * cap;
    if (remainder > 1e-14 && full < l) {
        for (Index k = 0; k < full; ++k) u[order[static_cast<std::size_t>(k)]] = cap;
        u[order[static_cast<std::size_t>(full)]] = remainder;
    } else {
        for (Index k = 0; k < full; ++k) u[order[static_cast<std::size_t>(k)]] = 1.0 / static_cast<double>(full);
    }
    return u;
}

double weighted_spread(const MatrixXd& points, const VectorXd& weights, const VectorXd& center,
                       VectorXd* direction) {
    const MatrixXd scaled = weights.cwiseSqrt().asDiagonal() * (points.rowwise() - center.transpose());
    const MatrixXd gram = scaled * scaled.transpose();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    const Index top = gram.rows() - 1;
    const double lambda = std::max(0.0, eig.eigenvalues()[top]);
    if (direction) {
        VectorXd v = scaled.transpose() * eig.eigenvectors().col(top);
        const double norm = v.norm();
        *direction = norm > 0.0 ? VectorXd(v / norm) : VectorXd::Zero(points.cols());
    }
    return lambda;
}

SpectralCenterResult spectral_center(const MatrixXd& points, double epsilon, int iterations) {
    const Index l = points.rows();
    if (l < 2) throw std::invalid_argument("spectral center needs at least two points");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
    if (iterations < 1) throw std::invalid_argument("spectral center needs at least one round");

    const VectorXd median = coordinate_median(points);
    VectorXd u = capped_weights((points.rowwise() - median.transpose()).rowwise().squaredNorm(), epsilon);

    SpectralCenterResult best;
    best.initial_radius_squared = weighted_spread(points, u, median);
    best.weights = u;
    best.center = points.transpose() * u;
    VectorXd direction;
    best.radius_squared = weighted_spread(points, u, best.center, &direction);
    best.best_round = 0;

    VectorXd center = best.center;
    for (int round = 1; round <= iterations && best.radius_squared > 0.0; ++round) {
        const VectorXd projections = (points.rowwise() - center.transpose()) * direction;
        u = capped_weights(projections.cwiseAbs2(), epsilon);
        center = points.transpose() * u;
        const double spread = weighted_spread(points, u, center, &direction);
        if (spread < best.radius_squared) {
            best.radius_squared = spread;
            best.weights = u;
            best.center = center;
            best.best_round = round;
        }
    }
    check_simplex_weights(best.weights, epsilon);
    return best;
}

bool is_combinatorial_center(const VectorXd& theta, const MatrixXd& points, double r, double kappa,
                             const std::vector<VectorXd>& directions) {
    if (directions.empty()) throw std::invalid_argument("at least one direction is required");
    const double required = (1.0 - kappa) * static_cast<double>(points.rows()) - 1e-12;
    const MatrixXd diffs = points.rowwise() - theta.transpose();
    for (const auto& v : directions) {
        if (std::abs(v.norm() - 1.0) > 1e-8) throw std::invalid_argument("direction is not a unit vector");
        const VectorXd proj = diffs * v;
        const auto within = (proj.array().abs() <= r).count();
        if (static_cast<double>(within) < required) return false;
    }
    return true;
}

ActionEstimator ActionEstimator::robust(const MatrixXd& sample, const RobustConfig& config) {
    ActionEstimator est;
    est.mode_ = EstimatorMode::robust;
    est.config_ = config;
    est.dimension_ = sample.cols();
    est.bucketed_ = std::make_shared<const BucketedSample>(sample, config);
    est.spectrum_ = est.bucketed_->spectrum();
    return est;
}

ActionEstimator ActionEstimator::plugin(CovEstimate cov, std::optional<Index> sample_size) {
    ActionEstimator est;
    est.mode_ = EstimatorMode::plugin;
    est.dimension_ = cov.dimension();
    if (sample_size) {
        SpectrumSummary s;
        s.sample_size = *sample_size;
        s.trace = cov.matrix.trace();
        s.top_eigenvalue = top_eigenvalue(cov.matrix);
        est.spectrum_ = s;
    }
    est.cov_ = std::make_shared<const CovEstimate>(std::move(cov));
    return est;
}

ActionEstimator ActionEstimator::plugin_from_sample(const MatrixXd& sample) {
    return plugin(sample_covariance(sample), sample.rows());
}

VectorXd ActionEstimator::operator()(const VectorXd& w) const {
    if (w.size() != dimension_) throw std::invalid_argument("action argument has the wrong dimension");
    if (mode_ == EstimatorMode::plugin) return cov_->matrix * w;
    return evaluate_detailed(w).center;
}

SpectralCenterResult ActionEstimator::evaluate_detailed(const VectorXd& w) const {
    if (mode_ != EstimatorMode::robust) throw std::logic_error("detailed evaluation needs robust mode");
    return spectral_center(bucket_action_means(*bucketed_, w), config_.epsilon, config_.center_iterations);
}

VectorXd robust_action(const ActionEstimator& est, const VectorXd& w) { return est(w); }

VectorXd robust_mean(const MatrixXd& sample, const RobustConfig& config) {
    config.validate();
    const Index l = resolve_bucket_count(config);
    if (sample.rows() < l) {
        throw DataError("robust mean needs at least as many observations as buckets (" +
                        std::to_string(l) + ")");
    }
    const auto offsets = contiguous_buckets(sample.rows(), l);
    MatrixXd means(l, sample.cols());
    for (Index j = 0; j < l; ++j) {
        const Index begin = offsets[static_cast<std::size_t>(j)];
        const Index size = offsets[static_cast<std::size_t>(j) + 1] - begin;
        means.row(j) = sample.middleRows(begin, size).colwise().mean();
    }
    return spectral_center(means, config.epsilon, config.center_iterations).center;
}

}  // namespace rgmv
