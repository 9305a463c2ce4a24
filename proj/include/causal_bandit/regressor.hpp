#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/errors.hpp"

namespace causal_bandit {

/// Ridge estimates of one node's observational and interventional weight
/// columns, restricted to its (estimated) parent block. The zero-padded
/// N x N gram of the model equals this block plus identity elsewhere, so the
/// block is all that is stored.
class NodeRegressor {
public:
    struct Side {
        Eigen::MatrixXd gram;   // I + sum x x^T over the parent block
        Eigen::VectorXd cross;  // sum x (x_i - nu_i)
        Eigen::VectorXd coef;   // gram^{-1} cross
        std::size_t count = 0;
        Eigen::MatrixXd chol;   // lower Cholesky factor of gram
        double lambda_min = 1.0;
    };

    NodeRegressor() = default;

    NodeRegressor(std::vector<std::size_t> parents, double nu) : parents_(std::move(parents)), nu_(nu) {
        const auto k = static_cast<Eigen::Index>(parents_.size());
        for (auto* s : {&obs_, &int_}) {
            s->gram = Eigen::MatrixXd::Identity(k, k);
            s->cross = Eigen::VectorXd::Zero(k);
            s->coef = Eigen::VectorXd::Zero(k);
            s->chol = Eigen::MatrixXd::Identity(k, k);
        }
    }

    const std::vector<std::size_t>& parents() const noexcept { return parents_; }
    std::size_t parent_count() const noexcept { return parents_.size(); }
    double nu() const noexcept { return nu_; }

    const Side& side(bool intervened) const noexcept { return intervened ? int_ : obs_; }
    const Side& observational() const noexcept { return obs_; }
    const Side& interventional() const noexcept { return int_; }

    /// Rank-one update of one side with a compact parent snapshot.
    void update(bool intervened, const Eigen::VectorXd& parent_values, double x_i) {
        Side& s = intervened ? int_ : obs_;
        ++s.count;
        if (parents_.empty()) return;
        if (parent_values.size() != static_cast<Eigen::Index>(parents_.size()))
            throw Error("parent snapshot has the wrong length");
        s.gram.noalias() += parent_values * parent_values.transpose();
        s.cross += parent_values * (x_i - nu_);
        refresh(s);
    }

    /// Update from a full realization: picks out the parent entries.
    void observe(bool intervened, const Eigen::VectorXd& x, std::size_t self) {
        Eigen::VectorXd pv(static_cast<Eigen::Index>(parents_.size()));
        for (std::size_t k = 0; k < parents_.size(); ++k)
            pv(static_cast<Eigen::Index>(k)) = x(static_cast<Eigen::Index>(parents_[k]));
        update(intervened, pv, x(static_cast<Eigen::Index>(self)));
    }

    /// Overwrites the coefficients of one side (warm starts and tests). The
    /// next update re-solves from the accumulated data.
    void set_coefficients(bool intervened, const Eigen::VectorXd& coef) {
        Side& s = intervened ? int_ : obs_;
        if (coef.size() != s.coef.size()) throw Error("coefficient vector has the wrong length");
        s.coef = coef;
    }

    /// Coefficients scattered into an N-vector.
    Eigen::VectorXd padded_coef(bool intervened, std::size_t node_count) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count));
        const Side& s = side(intervened);
        for (std::size_t k = 0; k < parents_.size(); ++k)
            out(static_cast<Eigen::Index>(parents_[k])) = s.coef(static_cast<Eigen::Index>(k));
        return out;
    }

private:
    static void refresh(Side& s) {
        Eigen::LLT<Eigen::MatrixXd> llt(s.gram);
        if (llt.info() != Eigen::Success) throw Error("gram matrix lost positive definiteness");
        s.chol = llt.matrixL();
        s.coef = llt.solve(s.cross);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.gram, Eigen::EigenvaluesOnly);
        s.lambda_min = eig.eigenvalues()(0);
    }

    std::vector<std::size_t> parents_;
    double nu_ = 0.0;
    Side obs_;
    Side int_;
};

}  // namespace causal_bandit
