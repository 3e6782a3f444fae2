#include <doctest.h>

#include <cmath>

#include "rgmv/errors.hpp"
#include "rgmv/gmv_pgd.hpp"
#include "test_support.hpp"

using namespace rgmv;

namespace {

ActionEstimator exact(const MatrixXd& m) { return ActionEstimator::plugin(CovEstimate(m, CovKind::exact_synthetic)); }

MatrixXd diag2(double a, double b) {
    MatrixXd m = MatrixXd::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

PgdConfig fixed(int steps, std::optional<double> eta = std::nullopt) {
    PgdConfig c;
    c.steps = steps;
    c.eta = eta;
    return c;
}

}  // namespace

TEST_SUITE("gmv_pgd") {

TEST_CASE("weight vector invariant") {
    CHECK_NOTHROW(WeightVector(VectorXd::Constant(4, 0.25)));
    VectorXd bad(2);
    bad << 0.6, 0.5;
    CHECK_THROWS_AS(WeightVector{bad}, std::invalid_argument);
    bad << 1.5, -0.5;
    CHECK_NOTHROW(WeightVector{bad});
    bad << std::nan(""), 1.0;
    CHECK_THROWS_AS(WeightVector{bad}, std::invalid_argument);
}

TEST_CASE("sum-one projection examples") {
    VectorXd x(2);
    x << 1, 0;
    CHECK(project_sum_one(x).values() == x);
    x << 0, 0;
    CHECK(project_sum_one(x).values().isApprox(VectorXd::Constant(2, 0.5)));
    x << 2, 0;
    const VectorXd p = project_sum_one(x).values();
    CHECK(p[0] == doctest::Approx(1.5));
    CHECK(p[1] == doctest::Approx(-0.5));
}

TEST_CASE("projection is the closest feasible point") {
    Philox4x32 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 1 + static_cast<Index>(rng() % 30);
        const VectorXd x = 3.0 * test::gaussian_matrix(n, 1, rng).col(0);
        const VectorXd p = project_sum_one(x).values();
        // Oracle: (I - 11'/N) x + 1/N as an explicit matrix product.
        const MatrixXd centering = MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
        const VectorXd oracle = centering * x + VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        CHECK((p - oracle).norm() <= 1e-12 * (1.0 + x.norm()));
        // x - p is orthogonal to the hyperplane, i.e. parallel to 1.
        const VectorXd d = x - p;
        CHECK((d.array() - d.mean()).abs().maxCoeff() <= 1e-12 * (1.0 + x.norm()));
    }
}

TEST_CASE("step size from power iteration") {
    CHECK(estimate_step_size(exact(diag2(1, 2))) == doctest::Approx(1.0 / 2.1).epsilon(1e-8));
    CHECK(estimate_step_size(exact(3.0 * MatrixXd::Identity(5, 5))) == doctest::Approx(1.0 / (1.05 * 3.0)).epsilon(1e-12));
    Philox4x32 rng(6);
    const MatrixXd s = test::random_covariance(8, 10.0, rng);
    CHECK(estimate_step_size(exact(2.0 * s)) == doctest::Approx(0.5 * estimate_step_size(exact(s))).epsilon(1e-10));
    CHECK_THROWS_AS(estimate_step_size(exact(MatrixXd::Zero(3, 3))), NumericalError);
}

TEST_CASE("stopping rule") {
    CHECK(default_step_count(0.1, 0.1) == 100);
    CHECK(default_step_count(1.0, 1.0) == 1);
    CHECK(default_step_count(2.0, 3.0) == 1);
    CHECK(default_step_count(1e-7, 1e-3) == 1'000'000);
    const double ds = plugin_delta_sigma(1.0, 3.0, 250.0, 0.05);
    CHECK(ds == doctest::Approx(std::sqrt((3.0 * std::log(3.0) + std::log(20.0)) / 250.0)).epsilon(1e-14));
    CHECK(ds == doctest::Approx(0.158638824).epsilon(1e-8));
    CHECK(default_step_count(1.0, ds) == 7);
    // r below e uses ln e = 1.
    CHECK(plugin_delta_sigma(2.0, 2.0, 100.0, 0.5) == doctest::Approx(2.0 * std::sqrt((2.0 + std::log(2.0)) / 100.0)));
}

TEST_CASE("automatic steps need a spectrum") {
    CHECK_THROWS_AS(gmv_pgd(exact(MatrixXd::Identity(3, 3))), ConfigError);
    const auto with_size = ActionEstimator::plugin(CovEstimate(MatrixXd::Identity(3, 3), CovKind::sample), 250);
    const auto trace = gmv_pgd(with_size);
    const double ds = plugin_delta_sigma(1.0, 3.0, 250.0, 0.05);
    CHECK(trace.steps == default_step_count(trace.eta, ds));
}

TEST_CASE("gmv descent examples") {
    const auto iso = gmv_pgd(exact(MatrixXd::Identity(4, 4)), fixed(50));
    REQUIRE(iso.path.size() == 51);
    for (const auto& w : iso.path) CHECK((w - VectorXd::Constant(4, 0.25)).norm() <= 1e-15);

    const auto d = gmv_pgd(exact(diag2(1, 2)), fixed(10'000, 1.0 / 2.1));
    CHECK(d.final_weights()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(std::abs(d.final_iterate()[1] - 1.0 / 3.0) <= 1e-6);

    MatrixXd c(2, 2);
    c << 1, 0.5, 0.5, 1;
    const auto e = gmv_pgd(exact(c), fixed(1000));
    CHECK((e.final_iterate() - VectorXd::Constant(2, 0.5)).norm() <= 1e-12);

    CHECK_THROWS_AS(gmv_pgd(exact(diag2(1, 2)), [] { PgdConfig p; p.mode = PgdMode::mv; return p; }()), ConfigError);
}

TEST_CASE("in-sample risk is recorded and non-increasing for the exact action") {
    Philox4x32 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 2 + static_cast<Index>(rng() % 49);
        const MatrixXd s = test::random_covariance(n, 1000.0, rng);
        const auto trace = gmv_pgd(exact(s), fixed(300));
        REQUIRE(trace.in_sample_risk.size() == trace.path.size());
        for (std::size_t k = 0; k < trace.path.size(); ++k) {
            CHECK(std::abs(trace.path[k].sum() - 1.0) <= 1e-12);
            CHECK(trace.in_sample_risk[k] == doctest::Approx(risk(trace.path[k], s)).epsilon(1e-12));
            if (k > 0) CHECK(trace.in_sample_risk[k] <= trace.in_sample_risk[k - 1] + 1e-12);
        }
    }
}

TEST_CASE("divergent step size is reported") {
    CHECK_THROWS_AS(gmv_pgd(exact(diag2(1, 100)), fixed(1000, 1.0)), NumericalError);
}

TEST_CASE("record_path = false keeps only the final iterate") {
    const auto full = gmv_pgd(exact(diag2(1, 3)), fixed(40));
    PgdConfig c = fixed(40);
    c.record_path = false;
    const auto last = gmv_pgd(exact(diag2(1, 3)), c);
    REQUIRE(last.path.size() == 1);
    CHECK(last.final_iterate() == full.final_iterate());
}

TEST_CASE("mean-variance descent") {
    PgdConfig c = fixed(20'000);
    c.mode = PgdMode::mv;
    VectorXd mu(2);
    mu << 0.1, -0.1;
    const auto t = mv_pgd(mu, exact(MatrixXd::Identity(2, 2)), c);
    CHECK(t.final_iterate()[0] == doctest::Approx(0.6).epsilon(1e-10));
    CHECK(t.final_iterate()[1] == doctest::Approx(0.4).epsilon(1e-10));

    // mu = 0: same iterates as GMV, whatever gamma.
    Philox4x32 rng(21);
    const MatrixXd s = test::random_covariance(6, 30.0, rng);
    const auto g = gmv_pgd(exact(s), fixed(500));
    for (double gamma : {1.0, 2.0, 5.0}) {
        PgdConfig m = fixed(500);
        m.mode = PgdMode::mv;
        m.gamma = gamma;
        const auto r = mv_pgd(VectorXd::Zero(6), exact(s), m);
        CHECK((r.final_iterate() - g.final_iterate()).norm() <= 1e-12);
    }

    PgdConfig bad = c;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(mv_pgd(mu, exact(MatrixXd::Identity(2, 2)), bad), ConfigError);
    CHECK_THROWS_AS(mv_pgd(VectorXd::Zero(3), exact(MatrixXd::Identity(2, 2)), c), std::invalid_argument);
}

TEST_CASE("risk and utility") {
    CHECK(risk(VectorXd::Constant(4, 0.25), MatrixXd::Identity(4, 4)) == doctest::Approx(0.125));
    CHECK(risk(VectorXd::Constant(3, 1.0 / 3.0), MatrixXd::Zero(3, 3)) == 0.0);
    VectorXd w(2);
    w << 2.0 / 3.0, 1.0 / 3.0;
    CHECK(risk(w, diag2(1, 2)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(risk(w, MatrixXd::Identity(3, 3)), std::invalid_argument);

    const CovEstimate id(MatrixXd::Identity(2, 2), CovKind::sample);
    VectorXd mu(2);
    mu << 0.1, -0.1;
    VectorXd v(2);
    v << 0.6, 0.4;
    CHECK(mv_utility(v, mu, id, 1.0) == doctest::Approx(-0.24).epsilon(1e-14));
    CHECK(mv_utility(v, VectorXd::Zero(2), id, 3.0) == doctest::Approx(-3.0 * risk(v, id)));
    CHECK(mv_utility(v, VectorXd::Ones(2), CovEstimate(MatrixXd::Zero(2, 2), CovKind::sample), 2.0) ==
          doctest::Approx(1.0));
    CHECK_THROWS_AS(mv_utility(v, VectorXd::Ones(3), id, 1.0), std::invalid_argument);
}

TEST_CASE("config validation") {
    PgdConfig c;
    c.eta = -1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("pgd.eta"), ConfigError);
    c = {};
    c.steps = 0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("pgd.steps"), ConfigError);
    c = {};
    c.steps = 2'000'000;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

}
