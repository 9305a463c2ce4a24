#include <cmath>

#include <gtest/gtest.h>

#include "causal_bandit/gallery.hpp"
#include "causal_bandit/instance_io.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace causal_bandit;

TEST(Hierarchical, LayeredShape) {
    const auto inst = fixture::layered(3, 2);
    EXPECT_EQ(inst.node_count(), 7u);
    EXPECT_EQ(inst.skeleton().parents(6).size(), 3u);
    EXPECT_EQ(enumerate_all_arms(inst.node_count()).size(), 128u);
}

TEST(Hierarchical, SingleLayerIsChain) {
    const auto inst = fixture::layered(1, 1);
    EXPECT_EQ(inst.node_count(), 2u);
    EXPECT_EQ(inst.skeleton().edges(), (std::vector<Edge>{{0, 1}}));
}

TEST(Hierarchical, RewardMeanCountsPaths) {
    EXPECT_DOUBLE_EQ(exact_mean(fixture::layered(2, 2), Arm{}, 4), 3.5);
}

TEST(Hierarchical, LayersAndInDegree) {
    for (std::size_t d = 1; d <= 3; ++d)
        for (std::size_t layers = 1; layers <= 4; ++layers) {
            const auto inst = fixture::layered(d, layers);
            const auto& g = inst.skeleton();
            EXPECT_EQ(g.node_count(), d * layers + 1);
            for (std::size_t l = 1; l <= layers; ++l)
                for (std::size_t j = 1; j <= d; ++j) {
                    const std::size_t v = (l - 1) * d + j - 1;
                    EXPECT_EQ(g.depth(v), l - 1);
                    EXPECT_EQ(g.parents(v).size(), l == 1 ? 0 : d);
                }
            EXPECT_EQ(g.depth(g.reward_node()), layers);
            EXPECT_EQ(g.parents(g.reward_node()).size(), d);
            EXPECT_TRUE(check_assumptions(inst).ok());
        }
}

TEST(LowerBound, BestArmsForBothInstances) {
    for (std::size_t d : {2u, 3u}) {
        const auto pair = lower_bound_pair(d, 2, 10000);
        EXPECT_EQ(best_arm_brute_force(pair.base).arm, Arm{});
        std::vector<std::size_t> mid;
        for (std::size_t j = d; j < 2 * d; ++j) mid.push_back(j);
        EXPECT_EQ(best_arm_brute_force(pair.swapped).arm, Arm::from_members(mid));
    }
    EXPECT_EQ(best_arm_brute_force(lower_bound_pair(2, 2, 1).swapped).arm, Arm::from_members({2, 3}));
}

TEST(LowerBound, KlIsOneAtCanonicalGap) {
    for (std::size_t d : {1u, 2u, 3u, 5u})
        for (std::size_t t : {1u, 7u, 10000u, 123457u}) {
            const double gap = lower_bound_gap(d, t);
            EXPECT_NEAR(lower_bound_kl(d, t, gap), 1.0, 1e-12);
        }
    EXPECT_NEAR(lower_bound_pair(2, 2, 10000).kl_value, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(lower_bound_gap(2, 10000), 1.0 / std::sqrt(4.0 * 3.0 * 10000.0));
}

TEST(LowerBound, DifferenceSupportedOnDepthOneColumns) {
    const std::size_t d = 3;
    const auto pair = lower_bound_pair(d, 3, 5000);
    const std::vector<Eigen::MatrixXd> diffs = {pair.base.b_obs() - pair.swapped.b_obs(),
                                                pair.base.b_int() - pair.swapped.b_int()};
    for (const auto& diff : diffs) {
        for (Eigen::Index j = 0; j < diff.rows(); ++j)
            for (Eigen::Index i = 0; i < diff.cols(); ++i) {
                const bool depth_one = i >= static_cast<Eigen::Index>(d) && i < static_cast<Eigen::Index>(2 * d);
                if (depth_one && pair.base.skeleton().has_edge(std::size_t(j), std::size_t(i)))
                    EXPECT_NEAR(std::abs(diff(j, i)), pair.gap, 1e-15);
                else
                    EXPECT_EQ(diff(j, i), 0.0);
            }
    }
}

TEST(LowerBound, NoiseMeansAndModes) {
    const auto pair = lower_bound_pair(2, 2, 100);
    EXPECT_EQ(pair.base.nu()(0), 1.0);
    EXPECT_EQ(pair.base.nu()(2), 0.0);
    EXPECT_TRUE(check_assumptions(pair.base).noise_bounded);
    const auto faithful = lower_bound_pair(2, 2, 100, 1.0, true);
    EXPECT_FALSE(check_assumptions(faithful.base).noise_bounded);
    EXPECT_EQ(best_arm_brute_force(faithful.swapped).arm, Arm::from_members({2, 3}));
}

TEST(LowerBound, RejectsInvalidParameters) {
    EXPECT_THROW(lower_bound_pair(2, 1, 100), InvalidInstance);
    EXPECT_THROW(lower_bound_pair(0, 2, 100), InvalidInstance);
    EXPECT_THROW(lower_bound_pair(1, 2, 1, 0.5), InvalidInstance);
    EXPECT_NO_THROW(lower_bound_pair(1, 2, 1, 1.0));
}

TEST(RandomDag, ZeroInDegreeIsEdgeless) {
    RandomDagSpec s;
    s.nodes = 5;
    s.max_parents = 0;
    EXPECT_TRUE(random_dag(s).skeleton().edges().empty());
}

TEST(RandomDag, DeterministicPerSeed) {
    RandomDagSpec s;
    s.seed = 77;
    EXPECT_EQ(format_instance(random_dag(s)), format_instance(random_dag(s)));
    RandomDagSpec t = s;
    t.seed = 78;
    EXPECT_NE(format_instance(random_dag(s)), format_instance(random_dag(t)));
}

TEST(RandomDag, PropertySweep) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomDagSpec s;
        s.nodes = 6;
        s.max_parents = 2;
        s.seed = seed;
        const auto inst = random_dag(s);
        EXPECT_LE(inst.skeleton().max_in_degree(), 2u);
        EXPECT_GT(intervention_margin(inst), 0.0);
        if (std::isinf(oracle::margin(inst)))
            EXPECT_TRUE(std::isinf(intervention_margin(inst)));
        else
            EXPECT_NEAR(intervention_margin(inst), oracle::margin(inst), 1e-12);
        EXPECT_TRUE(check_assumptions(inst).ok());
    }
}

TEST(RandomDag, SingleNode) {
    RandomDagSpec s;
    s.nodes = 1;
    const auto inst = random_dag(s);
    EXPECT_EQ(inst.node_count(), 1u);
    EXPECT_TRUE(inst.skeleton().edges().empty());
}
