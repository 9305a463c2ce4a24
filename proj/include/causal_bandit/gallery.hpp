#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "causal_bandit/errors.hpp"
#include "causal_bandit/sem.hpp"

namespace causal_bandit {

/// L fully connected layers of d nodes feeding one reward node.
/// Node (layer l, slot j), both 1-based, has index (l-1)*d + j; reward is d*L + 1.
struct HierarchicalSpec {
    std::size_t d = 2;
    std::size_t layers = 2;
    double w_obs = 1.0;
    double w_int = 0.5;
    NoiseSpec noise = NoiseSpec::uniform(0.0, 1.0);
};

namespace detail {

inline std::vector<Edge> hierarchical_edges(std::size_t d, std::size_t layers) {
    const std::size_t n = d * layers + 1;
    std::vector<Edge> edges;
    for (std::size_t l = 1; l < layers; ++l)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) edges.push_back({(l - 1) * d + a, l * d + b});
    for (std::size_t a = 0; a < d; ++a) edges.push_back({(layers - 1) * d + a, n - 1});
    return edges;
}

}  // namespace detail

inline SemInstance hierarchical(const HierarchicalSpec& spec) {
    if (spec.d < 1 || spec.layers < 1) throw InvalidInstance("hierarchical graph needs d >= 1 and L >= 1");
    const std::size_t n = spec.d * spec.layers + 1;
    auto edges = detail::hierarchical_edges(spec.d, spec.layers);
    const auto dim = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd bs = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto& e : edges) {
        b(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to)) = spec.w_obs;
        bs(static_cast<Eigen::Index>(e.from), static_cast<Eigen::Index>(e.to)) = spec.w_int;
    }
    std::vector<NoiseSpec> noise(n, spec.noise);
    Eigen::VectorXd nu = Eigen::VectorXd::Constant(dim, spec.noise.mean());
    const double m_b = std::max(std::abs(spec.w_obs), std::abs(spec.w_int));
    const double m_eps = spec.noise.magnitude_bound();
    return SemInstance(DagSkeleton(n, std::move(edges)), std::move(b), std::move(bs), std::move(noise), std::move(nu),
                       m_b > 0.0 ? m_b : 1.0, m_eps > 0.0 ? m_eps : 1.0);
}

/// Two hierarchical instances that agree everywhere except the incoming
/// columns of the depth-1 nodes (indices d+1..2d), where the observational and
/// interventional weights m_b and m_b - gap are swapped.
struct LowerBoundPair {
    std::size_t d = 0;
    std::size_t layers = 0;
    std::size_t horizon = 0;
    double gap = 0.0;
    double kl_value = 0.0;
    SemInstance base;     // best arm: {}
    SemInstance swapped;  // best arm: {d+1, ..., 2d}
};

/// gap = 1 / sqrt(d^2 (1+d) T); KL between the T-round laws = T d^2 (1+d) gap^2.
inline double lower_bound_gap(std::size_t d, std::size_t horizon) {
    const double dd = static_cast<double>(d);
    return 1.0 / std::sqrt(dd * dd * (1.0 + dd) * static_cast<double>(horizon));
}

inline double lower_bound_kl(std::size_t d, std::size_t horizon, double gap) {
    const double dd = static_cast<double>(d);
    return static_cast<double>(horizon) * dd * dd * (1.0 + dd) * gap * gap;
}

/// First-layer noise has mean 1, all other noise mean 0, unit variance.
/// With `gaussian_faithful` the noise is an untruncated Gaussian; otherwise it
/// is truncated at 6 sd so the instances satisfy the bounded-noise assumption.
inline LowerBoundPair lower_bound_pair(std::size_t d, std::size_t layers, std::size_t horizon, double m_b = 1.0,
                                       bool gaussian_faithful = false) {
    if (d < 1 || layers < 2 || horizon < 1) throw InvalidInstance("lower-bound pair needs d >= 1, L >= 2, T >= 1");
    const double gap = lower_bound_gap(d, horizon);
    if (!(gap < m_b)) throw InvalidInstance("horizon too small: perturbation must stay below m_b");

    const std::size_t n = d * layers + 1;
    const auto dim = static_cast<Eigen::Index>(n);
    const auto edges = detail::hierarchical_edges(d, layers);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd bs = b;
    Eigen::MatrixXd b_bar = b;
    Eigen::MatrixXd bs_bar = b;
    for (const auto& e : edges) {
        const auto j = static_cast<Eigen::Index>(e.from);
        const auto i = static_cast<Eigen::Index>(e.to);
        const bool depth_one_target = e.to >= d && e.to < 2 * d;
        b(j, i) = m_b;
        bs(j, i) = m_b - gap;
        b_bar(j, i) = depth_one_target ? m_b - gap : m_b;
        bs_bar(j, i) = depth_one_target ? m_b : m_b - gap;
    }
    constexpr double kTruncation = 6.0;
    std::vector<NoiseSpec> noise;
    Eigen::VectorXd nu(dim);
    double m_eps = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = i < d ? 1.0 : 0.0;
        noise.push_back(gaussian_faithful ? NoiseSpec::gaussian(mean, 1.0)
                                          : NoiseSpec::truncated_gaussian(mean, 1.0, kTruncation));
        nu(static_cast<Eigen::Index>(i)) = mean;
        m_eps = std::max(m_eps, std::abs(mean) + kTruncation);
    }

    LowerBoundPair pair;
    pair.d = d;
    pair.layers = layers;
    pair.horizon = horizon;
    pair.gap = gap;
    pair.kl_value = lower_bound_kl(d, horizon, gap);
    pair.base = SemInstance(DagSkeleton(n, edges), b, bs, noise, nu, m_b, m_eps);
    pair.swapped = SemInstance(DagSkeleton(n, edges), b_bar, bs_bar, noise, nu, m_b, m_eps);

    // The construction is only useful if the two best arms differ as intended.
    if (n <= kMaxEnumerableNodes) {
        std::vector<std::size_t> depth_one;
        for (std::size_t j = d; j < 2 * d; ++j) depth_one.push_back(j);
        if (best_arm_brute_force(pair.base).arm != Arm{} ||
            best_arm_brute_force(pair.swapped).arm != Arm::from_members(depth_one))
            throw InvalidInstance("lower-bound pair does not have the expected best arms");
    }
    return pair;
}

struct RandomDagSpec {
    std::size_t nodes = 6;
    std::size_t max_parents = 2;
    std::uint64_t seed = 0;
    double w_lo = 0.5;  // observational weight range
    double w_hi = 1.0;
    double gap_lo = 0.25;  // |B* - B| range per edge
    double gap_hi = 0.5;
    NoiseSpec noise = NoiseSpec::uniform(0.0, 1.0);
};

/// Random order over nodes 1..N-1 with the reward node appended last; each
/// node draws a uniform parent count in [0, min(d, #predecessors)] and that
/// many distinct predecessors. Each column shifts all of its weights the same
/// direction under intervention; with positive weights and positive noise
/// means this keeps the intervention margin positive, which is re-checked.
inline SemInstance random_dag(const RandomDagSpec& spec) {
    if (spec.nodes < 1) throw InvalidInstance("random DAG needs N >= 1");
    if (spec.nodes > kMaxNodes) throw InvalidInstance("random DAG exceeds 64 nodes");
    const std::size_t n = spec.nodes;
    const auto dim = static_cast<Eigen::Index>(n);
    Rng rng(spec.seed);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<std::size_t> order(n - 1);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        order.push_back(n - 1);

        std::vector<Edge> edges;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::MatrixXd bs = b;
        std::uniform_real_distribution<double> wdist(spec.w_lo, spec.w_hi);
        std::uniform_real_distribution<double> gdist(spec.gap_lo, spec.gap_hi);
        std::bernoulli_distribution up(0.5);
        double m_b = 0.0;
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::size_t child = order[pos];
            const std::size_t cap = std::min(spec.max_parents, pos);
            const std::size_t k = std::uniform_int_distribution<std::size_t>(0, cap)(rng);
            std::vector<std::size_t> pool(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos));
            std::shuffle(pool.begin(), pool.end(), rng);
            const double direction = up(rng) ? 1.0 : -1.0;
            for (std::size_t p = 0; p < k; ++p) {
                const std::size_t parent = pool[p];
                const double w = wdist(rng);
                const double ws = std::max(0.0, w + direction * gdist(rng));
                edges.push_back({parent, child});
                b(static_cast<Eigen::Index>(parent), static_cast<Eigen::Index>(child)) = w;
                bs(static_cast<Eigen::Index>(parent), static_cast<Eigen::Index>(child)) = ws;
                m_b = std::max({m_b, std::abs(w), std::abs(ws)});
            }
        }
        std::vector<NoiseSpec> noise(n, spec.noise);
        Eigen::VectorXd nu = Eigen::VectorXd::Constant(dim, spec.noise.mean());
        SemInstance inst(DagSkeleton(n, std::move(edges)), std::move(b), std::move(bs), std::move(noise), std::move(nu),
                         m_b > 0.0 ? m_b : 1.0, std::max(spec.noise.magnitude_bound(), 1e-12));
        if (intervention_margin(inst) > 0.0) return inst;
    }
    throw InvalidInstance("could not draw a random DAG with a positive intervention margin");
}

}  // namespace causal_bandit
