#pragma once

// Randomized property checks shared by the unit suite and the acceptance
// runner. Each check draws `cases` inputs from hand-rolled generators and
// reports the first counterexample.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "rgmv/gmv_pgd.hpp"
#include "rgmv/linalg.hpp"
#include "rgmv/parallel.hpp"
#include "rgmv/robust_core.hpp"
#include "rgmv/simulation.hpp"
#include "test_support.hpp"

namespace rgmv::prop {

struct Outcome {
    bool ok = true;
    int cases = 0;
    std::string detail;
};

inline Index uniform_index(Philox4x32& rng, Index lo, Index hi) {
    return lo + static_cast<Index>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline double log_uniform(Philox4x32& rng, double lo, double hi) {
    return lo * std::pow(hi / lo, rng.uniform());
}

template <class Check>
Outcome for_cases(int cases, std::uint64_t seed, Check&& check) {
    Outcome out;
    out.cases = cases;
    for (int k = 0; k < cases; ++k) {
        Philox4x32 rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::string why = check(rng);
        if (!why.empty()) {
            out.ok = false;
            out.detail = "case " + std::to_string(k) + ": " + why;
            return out;
        }
    }
    return out;
}

inline std::string fmt(double x) {
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

inline Outcome projection_idempotence(int cases, std::uint64_t seed = 101) {
    return for_cases(cases, seed, [](Philox4x32& rng) -> std::string {
        const Index n = uniform_index(rng, 1, 60);
        const double scale = log_uniform(rng, 1e-3, 1e3);
        const VectorXd x = scale * test::gaussian_matrix(n, 1, rng).col(0);
        const VectorXd p = project_sum_one_raw(x);
        const VectorXd pp = project_sum_one_raw(p);
        const double tol = 1e-12 * std::max(1.0, x.cwiseAbs().maxCoeff());
        if (std::abs(p.sum() - 1.0) > tol) return "sum " + fmt(p.sum());
        if ((pp - p).cwiseAbs().maxCoeff() > tol) return "not idempotent, gap " + fmt((pp - p).cwiseAbs().maxCoeff());
        // Optimality: x - p is a multiple of the ones vector.
        const VectorXd d = x - p;
        if ((d.array() - d.mean()).abs().maxCoeff() > tol) return "residual not parallel to ones";
        // Nonexpansive.
        const VectorXd y = x + scale * test::gaussian_matrix(n, 1, rng).col(0);
        if ((project_sum_one_raw(y) - p).norm() > (y - x).norm() * (1.0 + 1e-12) + tol) return "expansive";
        return "";
    });
}

/// 10^6 PGD steps with the exact action stay on the constraint.
inline Outcome long_run_feasibility(int cases, int steps = 1'000'000, std::uint64_t seed = 202) {
    Outcome out;
    out.cases = cases;
    std::vector<std::string> why(static_cast<std::size_t>(cases));
    parallel_for(static_cast<std::size_t>(cases), [&](std::size_t k) {
        Philox4x32 rng(derive_seed(seed, k));
        const Index n = uniform_index(rng, 2, 6);
        const double kappa = log_uniform(rng, 1.0, 1e4);
        const double scale = log_uniform(rng, 1e-4, 1e2);
        const auto action = ActionEstimator::plugin(CovEstimate(test::random_covariance(n, kappa, rng, scale), CovKind::exact_synthetic));
        PgdConfig config;
        config.steps = steps;
        config.record_path = false;
        const auto trace = gmv_pgd(action, config);
        const VectorXd& w = trace.final_iterate();
        if (!w.allFinite()) {
            why[k] = "non-finite iterate";
        } else if (std::abs(w.sum() - 1.0) > 1e-9) {
            why[k] = "sum drifted to " + fmt(w.sum());
        }
    });
    for (int k = 0; k < cases; ++k) {
        if (!why[static_cast<std::size_t>(k)].empty()) {
            out.ok = false;
            out.detail = "case " + std::to_string(k) + ": " + why[static_cast<std::size_t>(k)];
            break;
        }
    }
    return out;
}

inline Outcome robust_translation_invariance(int cases, std::uint64_t seed = 303) {
    return for_cases(cases, seed, [](Philox4x32& rng) -> std::string {
        const Index n = uniform_index(rng, 1, 12);
        const Index t = uniform_index(rng, 40, 240);
        const MatrixXd sigma = test::random_covariance(n, log_uniform(rng, 1.0, 100.0), rng);
        const MatrixXd x = test::gaussian_matrix(t, n, rng) * psd_sqrt(sigma);
        const VectorXd shift = 5.0 * test::gaussian_matrix(n, 1, rng).col(0);
        const MatrixXd moved = x.rowwise() + shift.transpose();
        RobustConfig config;
        // Two buckets tie exactly under the cap, so rounding picks the side.
        config.buckets = static_cast<int>(uniform_index(rng, 3, 10));
        const auto a = ActionEstimator::robust(x, config);
        const auto b = ActionEstimator::robust(moved, config);
        const VectorXd w = test::random_unit(n, rng);
        const VectorXd da = a(w);
        const VectorXd db = b(w);
        const double gap = (da - db).norm();
        if (gap > 1e-8 * std::max(1.0, da.norm())) return "action moved by " + fmt(gap);
        return "";
    });
}

inline Outcome spectral_center_weights(int cases, std::uint64_t seed = 404) {
    return for_cases(cases, seed, [](Philox4x32& rng) -> std::string {
        const Index l = uniform_index(rng, 2, 40);
        const Index d = uniform_index(rng, 1, 30);
        const double eps = 0.01 + 0.48 * rng.uniform();
        MatrixXd points = test::gaussian_matrix(l, d, rng);
        // Occasionally plant gross outliers.
        const Index outliers = uniform_index(rng, 0, l / 4);
        for (Index j = 0; j < outliers; ++j) points.row(uniform_index(rng, 0, l - 1)).array() += 1e3;
        const auto result = spectral_center(points, eps, static_cast<int>(uniform_index(rng, 1, 25)));
        const VectorXd& u = result.weights;
        const double cap = 1.0 / (static_cast<double>(l) * (1.0 - eps));
        if (u.size() != l) return "weight length";
        if (u.minCoeff() < 0.0) return "negative weight";
        if (std::abs(u.sum() - 1.0) > 1e-12) return "weights sum to " + fmt(u.sum());
        if (u.maxCoeff() > cap * (1.0 + 1e-12)) return "weight " + fmt(u.maxCoeff()) + " above cap " + fmt(cap);
        const VectorXd mean = points.transpose() * u;
        if ((mean - result.center).norm() > 1e-9 * std::max(1.0, mean.norm())) return "center is not the weighted mean";
        if (result.radius_squared > result.initial_radius_squared * (1.0 + 1e-12) + 1e-300) return "spread increased";
        return "";
    });
}

inline Outcome rotation_spectrum(int cases, std::uint64_t seed = 505) {
    return for_cases(cases, seed, [](Philox4x32& rng) -> std::string {
        const Index n = uniform_index(rng, 2, 30);
        const Index m = uniform_index(rng, 1, n);
        const MatrixXd s = test::random_covariance(n, log_uniform(rng, 1.0, 1e3), rng, log_uniform(rng, 1e-3, 10.0));
        const auto rot = rotate_for_benign_optimum(CovEstimate(s, CovKind::exact_synthetic), m);
        const MatrixXd& r = rot.rotation;
        if ((r.transpose() * r - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10) return "R not orthogonal";
        const VectorXd before = Eigen::SelfAdjointEigenSolver<MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues();
        const VectorXd after =
            Eigen::SelfAdjointEigenSolver<MatrixXd>(rot.rotated.matrix, Eigen::EigenvaluesOnly).eigenvalues();
        const double gap = (before - after).cwiseAbs().maxCoeff();
        if (gap > 1e-9 * before.cwiseAbs().maxCoeff()) return "spectrum moved by " + fmt(gap);
        if (rot.residual > 1e-8) return "ones residual " + fmt(rot.residual);
        if (ones_residual(rot.rotated.matrix, m) > 1e-8) return "independent residual " + fmt(ones_residual(rot.rotated.matrix, m));
        return "";
    });
}

inline Outcome generator_determinism(int cases, std::uint64_t seed = 606) {
    return for_cases(cases, seed, [](Philox4x32& rng) -> std::string {
        const Index n = uniform_index(rng, 1, 10);
        const Index t = uniform_index(rng, 1, 60);
        const std::uint64_t s = (static_cast<std::uint64_t>(rng()) << 32) | rng();
        const CovEstimate cov(test::random_covariance(n, 10.0, rng), CovKind::exact_synthetic);
        if (sample_gaussian(cov, t, s) != sample_gaussian(cov, t, s)) return "gaussian sample differs";
        if (sample_rademacher_subset(n, s) != sample_rademacher_subset(n, s)) return "rademacher draw differs";
        const auto spec = HeavyMixtureSpec::from_covariance(cov, 0.2 * rng.uniform());
        if (sample_heavy_mixture(spec, t, s) != sample_heavy_mixture(spec, t, s)) return "mixture sample differs";
        Philox4x32 a(s, 7), b(s, 7);
        for (int i = 0; i < 64; ++i)
            if (a() != b()) return "stream differs";
        if (t * n >= 4 && sample_gaussian(cov, t, s) == sample_gaussian(cov, t, s + 1)) return "seed ignored";
        return "";
    });
}

}  // namespace rgmv::prop
