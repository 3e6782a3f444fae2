#include <doctest.h>

#include <cmath>
#include <functional>

#include "rgmv/benchmarks.hpp"
#include "rgmv/errors.hpp"
#include "rgmv/simulation.hpp"
#include "test_support.hpp"

using namespace rgmv;

namespace {

CovEstimate cov_of(const MatrixXd& m) { return CovEstimate(m, CovKind::sample); }

MatrixXd mat2(double a, double b, double c) {
    MatrixXd m(2, 2);
    m << a, b, b, c;
    return m;
}

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

// Minimum of w'Sw over the simplex grid with spacing 1/steps.
double grid_minimum(const MatrixXd& s, int steps) {
    const Index n = s.rows();
    VectorXd w(n);
    double best = std::numeric_limits<double>::infinity();
    std::function<void(Index, int)> rec = [&](Index k, int left) {
        if (k == n - 1) {
            w[k] = left / static_cast<double>(steps);
            best = std::min(best, 0.5 * w.dot(s * w));
            return;
        }
        for (int i = 0; i <= left; ++i) {
            w[k] = i / static_cast<double>(steps);
            rec(k + 1, left - i);
        }
    };
    rec(0, steps);
    return best;
}

}  // namespace

TEST_SUITE("benchmarks") {

TEST_CASE("strategy registry") {
    for (const char* name : {"ew", "gmv", "gmv_long", "gmv_lin", "gmv_robust", "gmv_nlin"}) {
        CHECK(strategy_name(parse_strategy_kind(name)) == name);
    }
    CHECK_THROWS_WITH_AS(parse_strategy_kind("minvar"), doctest::Contains("strategies"), ConfigError);
    Strategy s;
    s.kind = StrategyKind::gmv_nlin;
    CHECK_THROWS_AS(s.fit(MatrixXd::Identity(5, 2)), NotImplementedError);
}

TEST_CASE("equal weights") {
    CHECK(ew_weights(4).values() == VectorXd::Constant(4, 0.25));
    CHECK(ew_weights(1).values()[0] == 1.0);
    CHECK(std::abs(ew_weights(10'000).values().sum() - 1.0) <= 1e-12);
    CHECK_THROWS_AS(ew_weights(0), std::invalid_argument);
}

TEST_CASE("sample GMV") {
    CHECK((sample_gmv(cov_of(MatrixXd::Identity(3, 3))).values() - VectorXd::Constant(3, 1.0 / 3.0)).norm() <= 1e-15);
    CHECK((sample_gmv(cov_of(mat2(1, 0, 2))).values() - vec2(2.0 / 3.0, 1.0 / 3.0)).norm() <= 1e-15);
    CHECK((sample_gmv(cov_of(mat2(1, 0.5, 1))).values() - vec2(0.5, 0.5)).norm() <= 1e-15);
    CHECK_THROWS_AS(sample_gmv(cov_of(mat2(1, 1, 1))), NumericalError);
    CHECK_THROWS_AS(sample_gmv(cov_of(mat2(1, 0, 1e-14))), NumericalError);

    Philox4x32 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd s = test::random_covariance(6, 50.0, rng);
        const VectorXd w = sample_gmv(cov_of(s)).values();
        // Oracle: explicit inverse.
        const VectorXd x = s.inverse() * VectorXd::Ones(6);
        CHECK((w - x / x.sum()).norm() <= 1e-10);
        CHECK((sample_gmv(cov_of(7.5 * s)).values() - w).norm() <= 1e-12);
    }
}

TEST_CASE("simplex projection") {
    const VectorXd on = vec2(0.3, 0.7);
    CHECK((project_simplex(on).values() - on).norm() <= 1e-15);
    CHECK(project_simplex(vec2(2, 0)).values() == vec2(1, 0));
    CHECK((project_simplex(vec2(0.6, 0.6)).values() - vec2(0.5, 0.5)).norm() <= 1e-15);

    // Oracle: the projection minimizes distance, compare to random simplex points.
    Philox4x32 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 10);
        const VectorXd x = 2.0 * test::gaussian_matrix(n, 1, rng).col(0);
        const VectorXd p = project_simplex(x).values();
        CHECK(p.minCoeff() >= 0.0);
        CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
        for (int k = 0; k < 20; ++k) {
            VectorXd q = test::gaussian_matrix(n, 1, rng).col(0).cwiseAbs();
            q /= q.sum();
            CHECK((x - p).norm() <= (x - q).norm() + 1e-12);
        }
    }
}

TEST_CASE("long-only GMV") {
    CHECK((gmv_long(cov_of(MatrixXd::Identity(4, 4))).values() - VectorXd::Constant(4, 0.25)).norm() <= 1e-12);
    const VectorXd slack = gmv_long(cov_of(mat2(1, 0, 100))).values();
    CHECK(slack[0] == doctest::Approx(100.0 / 101.0).epsilon(1e-8));

    const MatrixXd s = mat2(1, 0.9, 0.81 + 1e-3);
    const VectorXd unconstrained = s.inverse() * VectorXd::Ones(2);
    REQUIRE(unconstrained[0] / unconstrained.sum() < 0.0);
    const VectorXd w = gmv_long(cov_of(s)).values();
    CHECK(w[0] == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
        const VectorXd g = vec2(i / 1000.0, 1.0 - i / 1000.0);
        best = std::min(best, 0.5 * g.dot(s * g));
    }
    CHECK(0.5 * w.dot(s * w) <= best + 1e-12);
}

TEST_CASE("long-only GMV beats EW and a dense simplex grid") {
    Philox4x32 rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        MatrixXd s = test::random_covariance(5, 40.0, rng);
        s += 0.3 * MatrixXd::Constant(5, 5, 1.0) * (trial % 2);  // correlated variants
        const VectorXd w = gmv_long(cov_of(s)).values();
        CHECK(w.minCoeff() >= 0.0);
        const double r = 0.5 * w.dot(s * w);
        const VectorXd ew = VectorXd::Constant(5, 0.2);
        CHECK(r <= 0.5 * ew.dot(s * ew) + 1e-8);
        CHECK(r <= grid_minimum(s, 100) + 1e-8);
    }
}

TEST_CASE("linear shrinkage") {
    Philox4x32 rng(41);
    const MatrixXd x = test::gaussian_matrix(40, 6, rng) * test::random_covariance(6, 20.0, rng);
    const CovEstimate s = sample_covariance(x);
    const double mu = s.matrix.trace() / 6.0;

    const auto one = linear_shrinkage(s, x, 1.0);
    CHECK((one.cov.matrix - mu * MatrixXd::Identity(6, 6)).norm() <= 1e-15);
    const auto zero = linear_shrinkage(s, x, 0.0);
    CHECK(zero.cov.matrix == s.matrix);

    // Oracle: intensity from explicit outer products of centered rows.
    const auto est = linear_shrinkage(s, x);
    const VectorXd mean = x.colwise().mean();
    double num = 0.0;
    for (Index t = 0; t < 40; ++t) {
        const VectorXd d = x.row(t).transpose() - mean;
        num += (d * d.transpose() - s.matrix).squaredNorm();
    }
    num /= 40.0 * 40.0;
    const double den = (s.matrix - mu * MatrixXd::Identity(6, 6)).squaredNorm();
    CHECK(est.intensity == doctest::Approx(std::clamp(num / den, 0.0, 1.0)).epsilon(1e-10));
    CHECK(est.target_scale == doctest::Approx(mu));
    const MatrixXd expected = est.intensity * mu * MatrixXd::Identity(6, 6) + (1.0 - est.intensity) * s.matrix;
    CHECK((est.cov.matrix - expected).norm() <= 1e-14);
    if (est.intensity > 0.0) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> a(est.cov.matrix), b(s.matrix);
        CHECK(a.eigenvalues().minCoeff() >= est.intensity * mu * (1.0 - 1e-12));
        CHECK(a.eigenvalues().maxCoeff() / a.eigenvalues().minCoeff() <=
              b.eigenvalues().maxCoeff() / b.eigenvalues().minCoeff());
    }
}

TEST_CASE("shrinkage lowers out-of-sample variance of GMV in the T close to N regime") {
    int wins = 0;
    const CovEstimate identity(MatrixXd::Identity(50, 50), CovKind::exact_synthetic);
    for (int rep = 0; rep < 50; ++rep) {
        const MatrixXd x = sample_gaussian(identity, 60, derive_seed(500, rep));
        const CovEstimate s = sample_covariance(x);
        const VectorXd plain = sample_gmv(s).values();
        const VectorXd shrunk = sample_gmv(linear_shrinkage(s, x).cov).values();
        const MatrixXd fresh = sample_gaussian(identity, 2000, derive_seed(501, rep));
        auto oos = [&](const VectorXd& w) {
            const VectorXd r = fresh * w;
            return (r.array() - r.mean()).square().mean();
        };
        if (oos(shrunk) < oos(plain)) ++wins;
    }
    MESSAGE("shrinkage wins in " << wins << " of 50");
    CHECK(wins >= 40);
}

TEST_CASE("every strategy emits feasible weights") {
    Philox4x32 rng(5);
    const MatrixXd x = 0.01 * test::gaussian_matrix(120, 5, rng);
    for (auto kind : {StrategyKind::ew, StrategyKind::gmv_sample, StrategyKind::gmv_long, StrategyKind::gmv_lin,
                      StrategyKind::gmv_robust}) {
        Strategy s;
        s.kind = kind;
        const WeightVector w = s.fit(x);
        CHECK(w.size() == 5);
        CHECK(std::abs(w.values().sum() - 1.0) <= 1e-8);
        if (kind == StrategyKind::gmv_long) CHECK(w.values().minCoeff() >= 0.0);
    }
}

}
