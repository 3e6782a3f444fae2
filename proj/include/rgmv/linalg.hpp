#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>

#include "rgmv/errors.hpp"
#include "rgmv/rng.hpp"

namespace rgmv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Linear (or approximately linear) map R^N -> R^N given only by its action.
using ActionFn = std::function<VectorXd(const VectorXd&)>;

struct PowerIterationResult {
    double eigenvalue = 0.0;
    VectorXd eigenvector;
    int iterations = 0;
};

/// Random unit vector of dimension n drawn from the given stream.
VectorXd random_unit_vector(Index n, std::uint64_t seed, std::uint64_t stream = 0);

/// Matrix-free power iteration for the dominant eigenvalue of a PSD map.
///
/// Starts from a random unit vector, restarting with a fresh vector (up to
/// `max_restarts` times) if an iterate collapses to zero. The returned
/// eigenvalue is the norm of the action at the final unit iterate.
PowerIterationResult power_iteration(const ActionFn& action, Index n, int iterations,
                                     std::uint64_t seed, int max_restarts = 3);

/// Symmetric PSD square root via eigendecomposition; slightly negative
/// eigenvalues (>= -tol * lambda_max) are clamped to zero.
MatrixXd psd_sqrt(const MatrixXd& cov, double tol = 1e-8);

/// Largest eigenvalue of a symmetric matrix (dense, exact).
double top_eigenvalue(const MatrixXd& sym);

}  // namespace rgmv
