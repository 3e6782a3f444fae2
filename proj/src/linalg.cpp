#include "rgmv/linalg.hpp"

#include <random>

namespace rgmv {

VectorXd random_unit_vector(Index n, std::uint64_t seed, std::uint64_t stream) {
    Philox4x32 rng(seed, stream);
    std::normal_distribution<double> normal;
    VectorXd v(n);
    double norm = 0.0;
    do {
        for (Index i = 0; i < n; ++i) v[i] = normal(rng);
        norm = v.norm();
    } while (norm == 0.0);
    return v / norm;
}

PowerIterationResult power_iteration(const ActionFn& action, Index n, int iterations,
                                     std::uint64_t seed, int max_restarts) {
    for (int attempt = 0; attempt <= max_restarts; ++attempt) {
        VectorXd v = random_unit_vector(n, seed, static_cast<std::uint64_t>(attempt));
        double lambda = 0.0;
        bool collapsed = false;
        int it = 0;
        for (; it < iterations; ++it) {
            VectorXd av = action(v);
            lambda = av.norm();
            if (!std::isfinite(lambda)) {
                throw NumericalError("power iteration produced a non-finite iterate");
            }
            if (lambda == 0.0) {
                collapsed = true;
                break;
            }
            v = av / lambda;
        }
        if (!collapsed) {
            // Norm of the action at the final unit iterate.
            lambda = action(v).norm();
            return {lambda, std::move(v), it};
        }
    }
    throw NumericalError("power iteration collapsed to the zero vector after restarts");
}

MatrixXd psd_sqrt(const MatrixXd& cov, double tol) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("eigendecomposition failed");
    }
    const VectorXd& values = eig.eigenvalues();
    const double top = values.size() ? std::max(values.maxCoeff(), 0.0) : 0.0;
    if (values.size() && values.minCoeff() < -tol * std::max(top, 1e-300) && values.minCoeff() < -1e-300) {
        throw NumericalError("matrix is indefinite; cannot form a PSD square root");
    }
    const VectorXd roots = values.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double top_eigenvalue(const MatrixXd& sym) {
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

}  // namespace rgmv
