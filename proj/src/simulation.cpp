#include "rgmv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "rgmv/csv_format.hpp"
#include "rgmv/errors.hpp"
#include "rgmv/linalg.hpp"
#include "rgmv/parallel.hpp"

namespace rgmv {

namespace {

void fill_standard_normal(Eigen::Ref<VectorXd> row, Philox4x32& rng, std::normal_distribution<double>& normal) {
    for (Index k = 0; k < row.size(); ++k) row[k] = normal(rng);
}

RiskCurves make_curves(int replications, int steps) {
    RiskCurves c;
    c.population = MatrixXd::Zero(replications, steps + 1);
    c.in_sample = MatrixXd::Zero(replications, steps + 1);
    c.step_sizes.assign(static_cast<std::size_t>(replications), 0.0);
    return c;
}

// One PGD trace with a fixed step budget; fills row `rep` of `curves`.
void record_trace(const ActionEstimator& action, int steps, std::uint64_t seed, const MatrixXd& population_cov,
                  const MatrixXd& in_sample_cov, RiskCurves& curves, Index rep) {
    PgdConfig config;
    config.steps = steps;
    config.seed = seed;
    const PgdTrace trace = gmv_pgd(action, config);
    curves.step_sizes[static_cast<std::size_t>(rep)] = trace.eta;
    for (std::size_t s = 0; s < trace.path.size(); ++s) {
        const auto col = static_cast<Index>(s);
        curves.population(rep, col) = risk(trace.path[s], population_cov);
        curves.in_sample(rep, col) = risk(trace.path[s], in_sample_cov);
    }
}

void check_options(const ExperimentOptions& options) {
    if (options.steps < 1) throw ConfigError("experiment.steps must be at least 1");
    if (options.replications < 1) throw ConfigError("experiment.replications must be at least 1");
    options.robust.validate();
}

std::uint64_t trace_seed(std::uint64_t sample_seed) { return derive_seed(sample_seed, 0x5eed); }

}  // namespace

MatrixXd sample_gaussian(const CovEstimate& cov, Index rows, std::uint64_t seed) {
    if (rows < 0) throw std::invalid_argument("sample size must be non-negative");
    const MatrixXd root = psd_sqrt(cov.matrix);
    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    MatrixXd y(rows, cov.dimension());
    for (Index t = 0; t < rows; ++t) {
        VectorXd row(cov.dimension());
        fill_standard_normal(row, rng, normal);
        y.row(t) = row.transpose();
    }
    return y * root;
}

VectorXd sample_rademacher_subset(Index n, Philox4x32& rng) {
    if (n < 1) throw std::invalid_argument("Rademacher subset needs N >= 1");
    const Index k = std::uniform_int_distribution<Index>(0, n)(rng);
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    VectorXd z = VectorXd::Constant(n, -1.0);
    for (Index i = 0; i < k; ++i) {
        const Index j = std::uniform_int_distribution<Index>(i, n - 1)(rng);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        z[idx[static_cast<std::size_t>(i)]] = 1.0;
    }
    return z;
}

VectorXd sample_rademacher_subset(Index n, std::uint64_t seed) {
    Philox4x32 rng(seed);
    return sample_rademacher_subset(n, rng);
}

HeavyMixtureSpec HeavyMixtureSpec::from_covariance(const CovEstimate& cov, double p_heavy) {
    HeavyMixtureSpec spec;
    spec.cov_sqrt = psd_sqrt(cov.matrix);
    spec.p_heavy = p_heavy;
    spec.validate();
    return spec;
}

void HeavyMixtureSpec::validate() const {
    if (cov_sqrt.rows() != cov_sqrt.cols() || cov_sqrt.rows() < 1) {
        throw std::invalid_argument("heavy mixture needs a square covariance root");
    }
    if ((cov_sqrt - cov_sqrt.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, cov_sqrt.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("heavy mixture covariance root must be symmetric");
    }
    if (!(p_heavy >= 0.0 && p_heavy < 1.0)) throw std::invalid_argument("p_heavy must lie in [0, 1)");
}

MatrixXd HeavyMixtureSpec::middle_matrix() const {
    const Index n = dimension();
    MatrixXd m = MatrixXd::Constant(n, n, p_heavy / 3.0);
    m.diagonal().array() += (1.0 - p_heavy) + p_heavy * 2.0 / 3.0;
    return m;
}

MatrixXd HeavyMixtureSpec::population_covariance() const { return cov_sqrt * middle_matrix() * cov_sqrt; }

HeavyMixtureSample sample_heavy_mixture_detailed(const HeavyMixtureSpec& spec, Index rows, std::uint64_t seed) {
    spec.validate();
    const Index n = spec.dimension();
    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    HeavyMixtureSample out;
    MatrixXd y(rows, n);
    for (Index t = 0; t < rows; ++t) {
        VectorXd row(n);
        if (spec.p_heavy > 0.0 && rng.uniform() < spec.p_heavy) {
            row = sample_rademacher_subset(n, rng);
            out.heavy_rows.push_back(t);
        } else {
            fill_standard_normal(row, rng, normal);
        }
        y.row(t) = row.transpose();
    }
    out.data = y * spec.cov_sqrt;
    return out;
}

MatrixXd sample_heavy_mixture(const HeavyMixtureSpec& spec, Index rows, std::uint64_t seed) {
    return sample_heavy_mixture_detailed(spec, rows, seed).data;
}

double ones_residual(const MatrixXd& cov, Index top_count) {
    const Index n = cov.rows();
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    const MatrixXd top = eig.eigenvectors().rightCols(top_count);
    const VectorXd u = VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    return (u - top * (top.transpose() * u)).norm();
}

BenignRotation rotate_for_benign_optimum(const CovEstimate& s1, Index top_count) {
    const Index n = s1.dimension();
    if (top_count < 1 || top_count > n) throw std::invalid_argument("top eigenvector count must lie in [1, N]");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s1.matrix);
    if (eig.eigenvalues()[n - top_count] <= 0.0) {
        throw std::invalid_argument("covariance has fewer positive eigenvalues than the requested span");
    }
    const MatrixXd top = eig.eigenvectors().rightCols(top_count);
    const VectorXd u = VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    const VectorXd p = top * (top.transpose() * u);

    BenignRotation out;
    out.rotation = MatrixXd::Identity(n, n);
    if ((u - p).norm() > 1e-12) {
        const VectorXd a = p.norm() > 1e-12 ? VectorXd(p / p.norm()) : VectorXd(top.col(top_count - 1));
        // Plane rotation in span{a, u} taking a onto u, so that R' u = a lies in the top span.
        const double c = a.dot(u);
        VectorXd e2 = u - c * a;
        const double s = e2.norm();
        e2 /= s;
        out.rotation += (c - 1.0) * (a * a.transpose() + e2 * e2.transpose()) + s * (e2 * a.transpose() - a * e2.transpose());
    }
    MatrixXd rotated = out.rotation * s1.matrix * out.rotation.transpose();
    rotated = 0.5 * (rotated + rotated.transpose());
    out.rotated = CovEstimate(std::move(rotated), CovKind::exact_synthetic);
    out.residual = ones_residual(out.rotated.matrix, top_count);
    return out;
}

CovEstimate synthetic_market_covariance(Index n, double effective_rank, std::uint64_t seed, double scale) {
    if (n < 2) throw std::invalid_argument("synthetic covariance needs N >= 2");
    if (!(effective_rank > 1.0 && effective_rank < static_cast<double>(n))) {
        throw std::invalid_argument("effective rank must lie in (1, N)");
    }
    auto rank_of = [n](double alpha) {
        double total = 0.0;
        for (Index k = 1; k <= n; ++k) total += std::pow(static_cast<double>(k), -alpha);
        return total;
    };
    double lo = 0.0, hi = 16.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rank_of(mid) > effective_rank ? lo : hi) = mid;
    }
    const double alpha = 0.5 * (lo + hi);
    VectorXd spectrum(n);
    for (Index k = 0; k < n; ++k) spectrum[k] = scale * std::pow(static_cast<double>(k + 1), -alpha);

    Philox4x32 rng(seed);
    std::normal_distribution<double> normal;
    MatrixXd basis(n, n);
    for (Index i = 0; i < n; ++i) basis(i, 0) = 0.5 + rng.uniform();
    for (Index j = 1; j < n; ++j) {
        for (Index i = 0; i < n; ++i) basis(i, j) = normal(rng);
    }
    const MatrixXd q = Eigen::HouseholderQR<MatrixXd>(basis).householderQ();
    MatrixXd cov = q * spectrum.asDiagonal() * q.transpose();
    cov = 0.5 * (cov + cov.transpose());
    return CovEstimate(std::move(cov), CovKind::exact_synthetic);
}

VectorXd RiskCurves::mean_population() const { return population.colwise().mean().transpose(); }

VectorXd RiskCurves::mean_in_sample() const { return in_sample.colwise().mean().transpose(); }

VectorXd RiskCurves::quantile_population(double p) const {
    VectorXd q(population.cols());
    for (Index s = 0; s < population.cols(); ++s) {
        const VectorXd col = population.col(s);
        q[s] = empirical_quantile(std::vector<double>(col.data(), col.data() + col.size()), p);
    }
    return q;
}

const RiskCurves& ExperimentReport::curves(ActionSource source) const {
    const std::optional<RiskCurves>* slot = nullptr;
    switch (source) {
        case ActionSource::robust: slot = &robust; break;
        case ActionSource::plugin: slot = &plugin; break;
        case ActionSource::exact: slot = &exact; break;
    }
    if (!slot || !slot->has_value()) throw std::out_of_range("experiment has no curves for this estimator");
    return **slot;
}

ExperimentReport convergence_experiment(const CovEstimate& cov, Index rows, const ExperimentOptions& options,
                                        const std::vector<ActionSource>& sources) {
    check_options(options);
    if (sources.empty()) throw std::invalid_argument("select at least one estimator");
    ExperimentReport report;
    report.name = "convergence";
    report.replications = options.replications;
    report.steps = options.steps;
    report.seed = options.seed;
    for (auto source : sources) {
        auto curves = make_curves(options.replications, options.steps);
        switch (source) {
            case ActionSource::robust: report.robust = std::move(curves); break;
            case ActionSource::plugin: report.plugin = std::move(curves); break;
            case ActionSource::exact: report.exact = std::move(curves); break;
        }
    }
    const auto exact_action = ActionEstimator::plugin(CovEstimate(cov.matrix, CovKind::exact_synthetic));
    parallel_for(
        static_cast<std::size_t>(options.replications),
        [&](std::size_t r) {
            const auto rep = static_cast<Index>(r);
            const std::uint64_t seed = derive_seed(options.seed, r);
            const MatrixXd sample = sample_gaussian(cov, rows, seed);
            const MatrixXd sample_cov = sample_covariance(sample).matrix;
            for (auto source : sources) {
                switch (source) {
                    case ActionSource::robust:
                        record_trace(ActionEstimator::robust(sample, options.robust), options.steps, trace_seed(seed),
                                     cov.matrix, sample_cov, *report.robust, rep);
                        break;
                    case ActionSource::plugin:
                        record_trace(ActionEstimator::plugin(CovEstimate(sample_cov, CovKind::sample), rows),
                                     options.steps, trace_seed(seed), cov.matrix, sample_cov, *report.plugin, rep);
                        break;
                    case ActionSource::exact:
                        record_trace(exact_action, options.steps, trace_seed(seed), cov.matrix, cov.matrix,
                                     *report.exact, rep);
                        break;
                }
            }
        },
        options.threads);
    return report;
}

ExperimentReport tail_experiment(const HeavyMixtureSpec& spec, Index rows, const ExperimentOptions& options) {
    check_options(options);
    spec.validate();
    ExperimentReport report;
    report.name = "tail";
    report.replications = options.replications;
    report.steps = options.steps;
    report.seed = options.seed;
    report.robust = make_curves(options.replications, options.steps);
    report.plugin = make_curves(options.replications, options.steps);
    const MatrixXd population = spec.population_covariance();
    parallel_for(
        static_cast<std::size_t>(options.replications),
        [&](std::size_t r) {
            const auto rep = static_cast<Index>(r);
            const std::uint64_t seed = derive_seed(options.seed, r);
            const MatrixXd sample = sample_heavy_mixture(spec, rows, seed);
            const MatrixXd sample_cov = sample_covariance(sample).matrix;
            record_trace(ActionEstimator::robust(sample, options.robust), options.steps, trace_seed(seed), population,
                         sample_cov, *report.robust, rep);
            record_trace(ActionEstimator::plugin(CovEstimate(sample_cov, CovKind::sample), rows), options.steps,
                         trace_seed(seed), population, sample_cov, *report.plugin, rep);
        },
        options.threads);
    return report;
}

ContaminationReport contamination_experiment(const CovEstimate& cov, Index rows, const ExperimentOptions& options,
                                             const std::optional<VectorXd>& replacement) {
    check_options(options);
    if (rows < 2) throw std::invalid_argument("contamination experiment needs at least two rows");
    const Index n = cov.dimension();
    const MatrixXd clean = sample_gaussian(cov, rows, options.seed);

    ContaminationReport out;
    if (replacement) {
        if (replacement->size() != n) throw std::invalid_argument("replacement row has the wrong dimension");
        out.replacement = *replacement;
    } else {
        const VectorXd z = sample_rademacher_subset(n, derive_seed(options.seed, 1));
        out.replacement = psd_sqrt(cov.matrix) * z;
    }
    MatrixXd contaminated = clean;
    contaminated.row(0) = out.replacement.transpose();

    auto run = [&](const MatrixXd& sample, const char* name) {
        ExperimentReport report;
        report.name = name;
        report.replications = 1;
        report.steps = options.steps;
        report.seed = options.seed;
        report.robust = make_curves(1, options.steps);
        report.plugin = make_curves(1, options.steps);
        const MatrixXd sample_cov = sample_covariance(sample).matrix;
        const std::uint64_t seed = trace_seed(options.seed);
        record_trace(ActionEstimator::robust(sample, options.robust), options.steps, seed, cov.matrix, sample_cov,
                     *report.robust, 0);
        record_trace(ActionEstimator::plugin(CovEstimate(sample_cov, CovKind::sample), rows), options.steps, seed,
                     cov.matrix, sample_cov, *report.plugin, 0);
        return report;
    };
    out.contaminated = run(contaminated, "contamination");
    out.clean = run(clean, "contamination_clean");
    return out;
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Index argmin_step(const VectorXd& curve) {
    if (curve.size() == 0) throw std::invalid_argument("argmin of an empty curve");
    Index best = 0;
    for (Index s = 1; s < curve.size(); ++s) {
        if (curve[s] < curve[best]) best = s;
    }
    return best;
}

void write_experiment_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    const Index columns = report.steps + 1;
    const VectorXd none = VectorXd::Constant(columns, std::numeric_limits<double>::quiet_NaN());
    auto mean_of = [&](const std::optional<RiskCurves>& c) { return c ? c->mean_population() : none; };
    auto q95_of = [&](const std::optional<RiskCurves>& c) { return c ? c->quantile_population(0.95) : none; };
    const VectorXd mr = mean_of(report.robust), qr = q95_of(report.robust);
    const VectorXd mp = mean_of(report.plugin), qp = q95_of(report.plugin);
    VectorXd insample = none;
    if (report.plugin) insample = report.plugin->mean_in_sample();
    else if (report.robust) insample = report.robust->mean_in_sample();
    else if (report.exact) insample = report.exact->mean_in_sample();
    out << "step,mean_risk_robust,q95_risk_robust,mean_risk_plugin,q95_risk_plugin,mean_insample\r\n";
    for (Index s = 1; s < columns; ++s) {
        out << s << ',' << format_number(mr[s]) << ',' << format_number(qr[s]) << ',' << format_number(mp[s]) << ','
            << format_number(qp[s]) << ',' << format_number(insample[s]) << "\r\n";
    }
}

}  // namespace rgmv
