#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Dense>

#include "causal_bandit/errors.hpp"

namespace causal_bandit {

/// min_theta (1/n) ||y - X theta||^2 + lambda ||theta||_1
struct LassoProblem {
    Eigen::MatrixXd design;
    Eigen::VectorXd response;
    double lambda = 0.0;
    double tolerance = 1e-8;
    std::size_t max_sweeps = 100000;
};

struct LassoFit {
    Eigen::VectorXd coef;
    std::size_t sweeps = 0;
    double kkt_residual = 0.0;
};

/// lambda = m sqrt(2 log(4 N |An(i)| / delta) / n)
inline double lasso_lambda(double m, std::size_t node_count, std::size_t ancestor_count, double delta, std::size_t rows) {
    const double arg = 4.0 * static_cast<double>(node_count) * static_cast<double>(std::max<std::size_t>(ancestor_count, 1)) / delta;
    return m * std::sqrt(2.0 * std::log(arg) / static_cast<double>(rows));
}

namespace detail {

// Works on the sufficient statistics G = X^T X / n and c = X^T y / n; the
// negative gradient of the smooth part is 2 (c - G theta).
inline double kkt_residual(const Eigen::MatrixXd& gram, const Eigen::VectorXd& cross, double lambda,
                           const Eigen::VectorXd& coef) {
    const Eigen::VectorXd g = 2.0 * (cross - gram * coef);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < coef.size(); ++k) {
        const double r = coef(k) == 0.0 ? std::max(0.0, std::abs(g(k)) - lambda)
                                        : std::abs(g(k) - lambda * (coef(k) > 0.0 ? 1.0 : -1.0));
        worst = std::max(worst, r);
    }
    return worst;
}

inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace detail

/// Largest violation of the Lasso optimality conditions at `coef`.
inline double lasso_kkt_residual(const LassoProblem& p, const Eigen::VectorXd& coef) {
    const double n = static_cast<double>(p.design.rows());
    const Eigen::MatrixXd gram = p.design.transpose() * p.design / n;
    const Eigen::VectorXd cross = p.design.transpose() * p.response / n;
    return detail::kkt_residual(gram, cross, p.lambda, coef);
}

/// Cyclic coordinate descent with soft-thresholding.
inline LassoFit lasso_fit(const LassoProblem& p) {
    const Eigen::Index rows = p.design.rows();
    const Eigen::Index k = p.design.cols();
    if (rows < 1) throw Error("lasso needs at least one row");
    if (p.response.size() != rows) throw Error("lasso response length does not match the design");
    if (p.lambda < 0.0) throw Error("lasso penalty must be non-negative");

    const double n = static_cast<double>(rows);
    const Eigen::MatrixXd gram = p.design.transpose() * p.design / n;
    const Eigen::VectorXd cross = p.design.transpose() * p.response / n;

    LassoFit fit;
    fit.coef = Eigen::VectorXd::Zero(k);
    if (k == 0) return fit;

    for (fit.sweeps = 1; fit.sweeps <= p.max_sweeps; ++fit.sweeps) {
        for (Eigen::Index j = 0; j < k; ++j) {
            const double gjj = gram(j, j);
            if (gjj <= 0.0) {
                fit.coef(j) = 0.0;
                continue;
            }
            const double rho = cross(j) - gram.row(j).dot(fit.coef) + gjj * fit.coef(j);
            fit.coef(j) = detail::soft_threshold(2.0 * rho, p.lambda) / (2.0 * gjj);
        }
        fit.kkt_residual = detail::kkt_residual(gram, cross, p.lambda, fit.coef);
        if (fit.kkt_residual <= p.tolerance) return fit;
    }
    throw SolverDidNotConverge(p.max_sweeps, fit.kkt_residual);
}

}  // namespace causal_bandit
