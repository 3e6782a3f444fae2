#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <vector>

#include "rgmv/market_data.hpp"
#include "rgmv/robust_core.hpp"

namespace rgmv {

/// Portfolio weights summing to one (shorts allowed).
class WeightVector {
public:
    WeightVector() = default;
    /// Throws std::invalid_argument unless finite and |sum - 1| <= tol.
    explicit WeightVector(VectorXd weights, double tol = 1e-10);

    const VectorXd& values() const { return weights_; }
    Index size() const { return weights_.size(); }
    double operator[](Index i) const { return weights_[i]; }

private:
    VectorXd weights_;
};

enum class PgdMode { gmv, mv };

std::string_view to_string(PgdMode mode);

struct PgdConfig {
    PgdMode mode = PgdMode::gmv;
    std::optional<double> eta;   // nullopt: 1 / (1.05 lambda_max) through the action
    std::optional<int> steps;    // nullopt: Lemma-style stopping rule S ~ 1/(eta Delta)
    double gamma = 1.0;          // risk aversion, MV mode
    double delta = 0.05;         // confidence level fed to the stopping rule
    bool record_path = true;     // false keeps only the final iterate
    std::uint64_t seed = 0;      // power-iteration start

    void validate() const;
};

struct PgdTrace {
    std::vector<VectorXd> path;        // w_0 ... w_S (or just w_S)
    std::vector<double> in_sample_risk; // 0.5 w' a(w) along the path
    double eta = 0.0;
    int steps = 0;

    const VectorXd& final_iterate() const { return path.back(); }
    WeightVector final_weights() const { return WeightVector(path.back(), 1e-8); }
};

/// (I - 11'/N) x + 1/N: Euclidean projection onto {w : w'1 = 1}.
WeightVector project_sum_one(const VectorXd& x);
VectorXd project_sum_one_raw(const VectorXd& x);

/// 1 / (1.05 * lambda_hat), lambda_hat from 30 power-iteration steps through the action.
double estimate_step_size(const ActionEstimator& action, std::uint64_t seed = 0);

/// ||Sigma_hat|| sqrt((r ln max(r, e) + ln(1/delta)) / T).
double plugin_delta_sigma(double top_eigenvalue, double effective_rank, double sample_size,
                          double delta);

/// ceil(1 / (eta * delta_sigma)) clamped to [1, 10^6].
int default_step_count(double eta, double delta_sigma);

/// Plug-in stopping rule from the estimator's spectrum summary.
int default_step_count(const ActionEstimator& action, double eta, double delta);

/// w_0 = 1/N, w_s = Pi_1[w_{s-1} - eta a(w_{s-1})].
PgdTrace gmv_pgd(const ActionEstimator& action, const PgdConfig& config = {});

/// w_s = Pi_1[w_{s-1} + eta (mu - gamma a(w_{s-1}))].
PgdTrace mv_pgd(const VectorXd& mean, const ActionEstimator& action, const PgdConfig& config);

/// 0.5 w' Sigma w.
double risk(const VectorXd& w, const CovEstimate& cov);
double risk(const VectorXd& w, const MatrixXd& cov);

/// mu'w - (gamma/2) w' Sigma w.
double mv_utility(const VectorXd& w, const VectorXd& mean, const CovEstimate& cov, double gamma);

/// Sigma^-1 1 / (1' Sigma^-1 1) via an LDLT solve.
VectorXd closed_form_gmv(const MatrixXd& cov);

}  // namespace rgmv
