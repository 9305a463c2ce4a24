#include <cmath>

#include <gtest/gtest.h>

#include "causal_bandit/sem.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace causal_bandit;
using fixture::make;

TEST(ArmMatrix, EmptyArmIsObservationalAndFullArmIsInterventional) {
    const auto inst = fixture::layered(2, 2);
    EXPECT_EQ(arm_matrix(inst, Arm{}), inst.b_obs());
    EXPECT_EQ(arm_matrix(inst, enumerate_all_arms(inst.node_count()).back()), inst.b_int());
}

TEST(ArmMatrix, SwapsOnlyIntervenedColumns) {
    const auto inst = fixture::chain2();
    const auto b = arm_matrix(inst, Arm::single(1));
    EXPECT_EQ(b(0, 1), 0.5);
    EXPECT_EQ(arm_matrix(inst, Arm::single(0))(0, 1), 1.0);
}

TEST(Sample, NoEdgesConstantNoise) {
    const auto inst = make(3, {}, NoiseSpec::constant(0.7));
    const auto x = sample(inst, Arm{}, 5);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(x(i), 0.7);
}

TEST(Sample, ChainForwardSubstitution) {
    const auto inst = make(2, {{1, 2, 1.0, 0.5}}, NoiseSpec::constant(1.0));
    const auto x = sample(inst, Arm{}, 1);
    EXPECT_EQ(x(0), 1.0);
    EXPECT_EQ(x(1), 2.0);
}

TEST(Sample, MatchesNaiveOracleOnHierarchical) {
    const auto inst = fixture::layered(2, 2);
    for (auto arm : enumerate_all_arms(inst.node_count())) {
        Rng a(99 + arm.mask()), b(99 + arm.mask());
        for (int k = 0; k < 20; ++k) {
            const auto x = sample(inst, arm, a);
            const auto y = oracle::naive_sample(inst, arm, b);
            for (Eigen::Index i = 0; i < x.size(); ++i) EXPECT_NEAR(x(i), y(i), 1e-12);
        }
    }
}

TEST(Sample, DeterministicPerSeed) {
    const auto inst = fixture::layered(3, 2);
    EXPECT_EQ(sample(inst, Arm::single(4), 123), sample(inst, Arm::single(4), 123));
    EXPECT_NE(sample(inst, Arm::single(4), 123), sample(inst, Arm::single(4), 124));
}

TEST(PathSum, NoEdgesIsIndicator) {
    const auto inst = make(3, {}, NoiseSpec::uniform(0, 1));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(path_sum(inst, Arm{}, i), Eigen::VectorXd::Unit(3, static_cast<Eigen::Index>(i)));
}

TEST(PathSum, ChainCountsEveryPath) {
    const auto inst = fixture::chain3(1.0, 0.5);
    EXPECT_EQ(path_sum(inst, Arm{}, 2), Eigen::Vector3d(1, 1, 1));
}

TEST(PathSum, HierarchicalPowersMatchRecursion) {
    const auto inst = fixture::layered(2, 2);
    for (auto arm : enumerate_all_arms(inst.node_count()))
        for (std::size_t i = 0; i < inst.node_count(); ++i) {
            const auto f = path_sum(inst, arm, i);
            const auto g = oracle::path_sum_powers(inst, arm, i);
            EXPECT_LE((f - g).cwiseAbs().maxCoeff(), 1e-12);
        }
}

TEST(PathSum, DualityOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto inst = fixture::random_small(seed);
        for (auto arm : enumerate_all_arms(inst.node_count()))
            for (std::size_t i = 0; i < inst.node_count(); ++i)
                ASSERT_LE((path_sum(inst, arm, i) - oracle::path_sum_powers(inst, arm, i)).cwiseAbs().maxCoeff(), 1e-10)
                    << "seed " << seed << " arm " << arm.to_string();
    }
}

TEST(ExactMean, NoEdgesIsNoiseMean) {
    const auto inst = make(2, {}, {NoiseSpec::uniform(0, 1), NoiseSpec::uniform(-1, 3)});
    EXPECT_EQ(exact_mean(inst, Arm{}, 0), 0.5);
    EXPECT_EQ(exact_mean(inst, Arm::single(1), 1), 1.0);
}

TEST(ExactMean, ChainSumsNoiseMeans) {
    EXPECT_DOUBLE_EQ(exact_mean(fixture::chain3(1.0, 0.5), Arm{}, 2), 1.5);
}

TEST(ExactMean, InnerProductWithPathSum) {
    const auto inst = fixture::layered(3, 2);
    for (auto arm : enumerate_all_arms(inst.node_count()))
        EXPECT_NEAR(exact_mean(inst, arm, 6), path_sum(inst, arm, 6).dot(inst.nu()), 1e-12);
}

TEST(ExactMean, MatchesMonteCarloOnLayeredInstance) {
    const auto inst = fixture::layered(3, 2);
    const std::size_t n = 100000;
    const auto mc = oracle::monte_carlo(inst, Arm{}, 6, n, 42);
    EXPECT_LE(std::abs(mc.mean - exact_mean(inst, Arm{}, 6)), 3.0 * mc.sd / std::sqrt(double(n)));
}

TEST(ExactMean, SamplingConsistencyEveryArm) {
    const auto inst = fixture::layered(2, 2);
    const std::size_t n = 100000;
    for (auto arm : enumerate_all_arms(inst.node_count())) {
        Rng rng(1000 + arm.mask());
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(5), sq = Eigen::VectorXd::Zero(5);
        for (std::size_t k = 0; k < n; ++k) {
            const auto x = sample(inst, arm, rng);
            sum += x;
            sq += x.cwiseAbs2();
        }
        const Eigen::VectorXd mu = exact_means(inst, arm);
        for (Eigen::Index i = 0; i < 5; ++i) {
            const double m = sum(i) / n;
            const double sd = std::sqrt((sq(i) - n * m * m) / (n - 1));
            EXPECT_LE(std::abs(m - mu(i)), 4.0 * sd / std::sqrt(double(n))) << arm.to_string() << " node " << i + 1;
        }
    }
}

TEST(BestArm, MonotoneWeightsPreferEmptyArm) {
    const auto inst = fixture::layered(2, 2);
    const auto best = best_arm_brute_force(inst);
    EXPECT_EQ(best.arm, Arm{});
    EXPECT_DOUBLE_EQ(best.value, 3.5);
}

TEST(BestArm, TiesGoToCanonicalFirst) {
    // Intervening the root changes nothing, so {} and {1} tie; {2} is better.
    const auto inst = make(2, {{1, 2, 0.5, 1.0}}, NoiseSpec::uniform(0, 1));
    EXPECT_EQ(best_arm_brute_force(inst).arm, Arm::single(1));
    const std::vector<Arm> cands{Arm::single(0), Arm{}};
    EXPECT_EQ(best_arm_brute_force(inst, cands).arm, Arm{});
}

TEST(BestArm, GuardWithoutCandidates) {
    const auto inst = make(21, {}, NoiseSpec::uniform(0, 1));
    EXPECT_THROW(best_arm_brute_force(inst), TooManyArms);
    const auto relevant = reward_relevant_arms(inst);
    EXPECT_EQ(relevant.size(), 2u);
    EXPECT_NO_THROW(best_arm_brute_force(inst, relevant));
}

TEST(BestArm, MatchesSolveOracle) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = fixture::random_small(seed);
        EXPECT_NEAR(best_arm_brute_force(inst).value, oracle::best_value(inst), 1e-10);
    }
}

TEST(Margin, NoEdgesIsInfinite) {
    EXPECT_TRUE(std::isinf(intervention_margin(make(3, {}, NoiseSpec::uniform(0, 1)))));
}

TEST(Margin, ChainIncludesSelfShift) {
    const auto inst = fixture::chain2();
    EXPECT_DOUBLE_EQ(exact_mean(inst, Arm{}, 1), 1.0);
    EXPECT_DOUBLE_EQ(exact_mean(inst, Arm::single(1), 1), 0.75);
    EXPECT_DOUBLE_EQ(intervention_margin(inst), 0.25);
}

TEST(Margin, MatchesExhaustivePairEnumeration) {
    const auto inst = fixture::layered(2, 2);
    EXPECT_NEAR(intervention_margin(inst), oracle::margin(inst), 1e-12);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = fixture::random_small(seed);
        const double got = intervention_margin(r), want = oracle::margin(r);
        // Graphs without edges have no pair to bound, hence an infinite margin.
        if (std::isinf(want))
            EXPECT_EQ(got, want) << seed;
        else
            EXPECT_NEAR(got, want, 1e-12) << seed;
    }
}

TEST(ValueBound, Examples) {
    EXPECT_EQ(value_bound(make(3, {}, NoiseSpec::uniform(-1, 1))), 1.0);
    EXPECT_EQ(value_bound(make(3, {{1, 2, 1, 0.5}, {2, 3, 1, 0.5}}, NoiseSpec::uniform(-1, 1))), 3.0);
    EXPECT_EQ(value_bound(fixture::layered(2, 2)), 7.0);
}

TEST(ValueBound, BoundsEverySample) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto inst = fixture::random_small(seed);
        const double m = value_bound(inst);
        Rng rng(seed);
        for (auto arm : enumerate_all_arms(inst.node_count()))
            for (int k = 0; k < 20; ++k) EXPECT_LE(sample(inst, arm, rng).cwiseAbs().maxCoeff(), m);
    }
}

TEST(Instance, ValidationRejectsBadInputs) {
    DagSkeleton g(2, {{0, 1}});
    Eigen::Matrix2d b = Eigen::Matrix2d::Zero(), bs = Eigen::Matrix2d::Zero();
    b(0, 1) = 1.0;
    bs(0, 1) = 0.5;
    const std::vector<NoiseSpec> noise(2, NoiseSpec::uniform(0, 1));
    const Eigen::Vector2d nu(0.5, 0.5);
    EXPECT_NO_THROW(SemInstance(g, b, bs, noise, nu, 1.0, 1.0));
    Eigen::Matrix2d off = b;
    off(1, 0) = 0.3;
    EXPECT_THROW(SemInstance(g, off, bs, noise, nu, 1.0, 1.0), InvalidInstance);
    EXPECT_THROW(SemInstance(g, b * 3, bs, noise, nu, 1.0, 1.0), InvalidInstance);
    EXPECT_THROW(SemInstance(g, b, bs, noise, Eigen::Vector2d(0.5, 0.4), 1.0, 1.0), InvalidInstance);
    EXPECT_THROW(SemInstance(g, b, bs, std::vector<NoiseSpec>(1, NoiseSpec::uniform(0, 1)), nu, 1.0, 1.0), InvalidInstance);
}

TEST(Instance, TopologicalValidityOnRandomInstances) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto inst = fixture::random_small(seed);
        const auto& order = inst.skeleton().order();
        std::vector<std::size_t> pos(order.size());
        for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
        for (const auto& e : inst.skeleton().edges()) EXPECT_LT(pos[e.from], pos[e.to]);
    }
}

TEST(Assumptions, ReportFlagsViolations) {
    EXPECT_TRUE(check_assumptions(fixture::layered(2, 2)).ok());
    const auto flat = make(2, {{1, 2, 1.0, 1.0}}, NoiseSpec::uniform(0, 1));
    const auto r = check_assumptions(flat);
    EXPECT_FALSE(r.margin_positive);
    EXPECT_EQ(r.margin, 0.0);
}

TEST(Noise, FamiliesCarryTheirMeanAndBound) {
    EXPECT_EQ(NoiseSpec::uniform(-1, 3).mean(), 1.0);
    EXPECT_EQ(NoiseSpec::uniform(-1, 3).magnitude_bound(), 3.0);
    EXPECT_EQ(NoiseSpec::constant(-2).magnitude_bound(), 2.0);
    EXPECT_EQ(NoiseSpec::truncated_gaussian(1, 1, 6).mean(), 1.0);
    EXPECT_EQ(NoiseSpec::truncated_gaussian(1, 1, 6).magnitude_bound(), 7.0);
    EXPECT_TRUE(std::isinf(NoiseSpec::gaussian(0, 1).magnitude_bound()));
    Rng rng(3);
    for (int k = 0; k < 10000; ++k) {
        const double v = NoiseSpec::truncated_gaussian(1, 1, 2).sample(rng);
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 3.0);
    }
    EXPECT_THROW(NoiseSpec::uniform(1, 0), Error);
    EXPECT_THROW(NoiseSpec::gaussian(0, -1), Error);
}
