#include <gtest/gtest.h>

#include "causal_bandit/regressor.hpp"
#include "causal_bandit/sem.hpp"
#include "support/fixtures.hpp"

using namespace causal_bandit;

TEST(Regressor, FreshStateHasZeroCoefficients) {
    NodeRegressor r({0, 2}, 0.5);
    EXPECT_EQ(r.observational().coef, Eigen::VectorXd::Zero(2));
    EXPECT_EQ(r.interventional().gram, Eigen::MatrixXd::Identity(2, 2));
    EXPECT_EQ(r.observational().lambda_min, 1.0);
}

TEST(Regressor, TwoSampleRidgeClosedForm) {
    NodeRegressor r({0}, 0.0);
    r.update(false, Eigen::VectorXd::Constant(1, 1.0), 2.0);
    r.update(false, Eigen::VectorXd::Constant(1, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(r.observational().gram(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(r.observational().cross(0), 4.0);
    EXPECT_DOUBLE_EQ(r.observational().coef(0), 4.0 / 3.0);
}

TEST(Regressor, SidesAreIsolated) {
    NodeRegressor r({0, 1}, 0.5);
    r.update(false, Eigen::Vector2d(1.0, 2.0), 3.0);
    const auto before = r.observational();
    r.update(true, Eigen::Vector2d(0.3, -1.0), 1.0);
    r.update(true, Eigen::Vector2d(0.7, 0.2), 0.4);
    EXPECT_EQ(r.observational().gram, before.gram);
    EXPECT_EQ(r.observational().cross, before.cross);
    EXPECT_EQ(r.observational().coef, before.coef);
    EXPECT_EQ(r.observational().count, 1u);
    EXPECT_EQ(r.interventional().count, 2u);
}

TEST(Regressor, MatchesPaddedRidgeOracle) {
    // Ambient-dimension ridge with identity off the support equals the block solve.
    const auto inst = fixture::layered(2, 2);
    const std::size_t node = 4;
    NodeRegressor r(inst.skeleton().parents(node), inst.nu()(4));
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(5);
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const Arm arm(rng() & 0x1f);
        const auto x = sample(inst, arm, rng);
        const bool side = arm.contains(node);
        r.observe(side, x, node);
        if (!side) {
            Eigen::VectorXd pad = Eigen::VectorXd::Zero(5);
            for (auto p : inst.skeleton().parents(node)) pad(Eigen::Index(p)) = x(Eigen::Index(p));
            v += pad * pad.transpose();
            cross += pad * (x(4) - inst.nu()(4));
        }
        EXPECT_EQ(r.observational().count + r.interventional().count, std::size_t(t + 1));
        EXPECT_GE(r.observational().lambda_min, 1.0 - 1e-12);
        EXPECT_GE(r.interventional().lambda_min, 1.0 - 1e-12);
    }
    const Eigen::VectorXd expect = v.ldlt().solve(cross);
    EXPECT_LE((r.padded_coef(false, 5) - expect).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(r.padded_coef(false, 5)(0), 0.0);
}

TEST(Regressor, ConvergesToTrueColumns) {
    const auto inst = fixture::layered(2, 2);
    NodeRegressor r(inst.skeleton().parents(4), inst.nu()(4));
    Rng rng(4);
    for (int t = 0; t < 20000; ++t) {
        const Arm arm = (t % 2) ? Arm::single(4) : Arm{};
        r.observe(arm.contains(4), sample(inst, arm, rng), 4);
    }
    EXPECT_NEAR(r.observational().coef(0), 1.0, 0.05);
    EXPECT_NEAR(r.interventional().coef(1), 0.5, 0.05);
}

TEST(Regressor, ParentlessNodeOnlyCounts) {
    NodeRegressor r({}, 0.5);
    r.observe(false, Eigen::VectorXd::Constant(3, 1.0), 1);
    EXPECT_EQ(r.observational().count, 1u);
    EXPECT_EQ(r.observational().coef.size(), 0);
}

TEST(Regressor, SetCoefficientsChecksLength) {
    NodeRegressor r({0, 1}, 0.0);
    EXPECT_THROW(r.set_coefficients(false, Eigen::VectorXd::Zero(3)), Error);
    r.set_coefficients(true, Eigen::Vector2d(0.5, 0.25));
    EXPECT_EQ(r.padded_coef(true, 3), Eigen::Vector3d(0.5, 0.25, 0.0));
    EXPECT_THROW(r.update(false, Eigen::VectorXd::Zero(1), 0.0), Error);
}
