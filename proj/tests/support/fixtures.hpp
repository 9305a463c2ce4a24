#pragma once

#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/gallery.hpp"
#include "causal_bandit/noise.hpp"
#include "causal_bandit/sem.hpp"

namespace fixture {

using namespace causal_bandit;

struct WeightedEdge {
    std::size_t from;  // 1-based
    std::size_t to;    // 1-based
    double b;
    double b_star;
};

/// Builds an instance from 1-based weighted edges; m_b and m_eps are taken
/// as the smallest values that validate.
inline SemInstance make(std::size_t n, const std::vector<WeightedEdge>& edges, const std::vector<NoiseSpec>& noise) {
    std::vector<Edge> e;
    const auto dim = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim), bs = Eigen::MatrixXd::Zero(dim, dim);
    double m_b = 1.0;
    for (const auto& w : edges) {
        e.push_back({w.from - 1, w.to - 1});
        b(static_cast<Eigen::Index>(w.from - 1), static_cast<Eigen::Index>(w.to - 1)) = w.b;
        bs(static_cast<Eigen::Index>(w.from - 1), static_cast<Eigen::Index>(w.to - 1)) = w.b_star;
        m_b = std::max({m_b, std::abs(w.b), std::abs(w.b_star)});
    }
    Eigen::VectorXd nu(dim);
    double m_eps = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        nu(static_cast<Eigen::Index>(i)) = noise[i].mean();
        m_eps = std::max(m_eps, noise[i].magnitude_bound());
    }
    return SemInstance(DagSkeleton(n, std::move(e)), b, bs, noise, nu, m_b, m_eps);
}

inline SemInstance make(std::size_t n, const std::vector<WeightedEdge>& edges, NoiseSpec noise) {
    return make(n, edges, std::vector<NoiseSpec>(n, noise));
}

/// Chain 1 -> 2 with B = 1, B* = 0.5 and nu = 0.5 (uniform(0,1) noise).
inline SemInstance chain2() { return make(2, {{1, 2, 1.0, 0.5}}, NoiseSpec::uniform(0.0, 1.0)); }

/// Chain 1 -> 2 -> 3 with all weights w and B* = w_star.
inline SemInstance chain3(double w = 1.0, double w_star = 0.5, NoiseSpec noise = NoiseSpec::uniform(0.0, 1.0)) {
    return make(3, {{1, 2, w, w_star}, {2, 3, w, w_star}}, noise);
}

inline SemInstance layered(std::size_t d, std::size_t layers) {
    return hierarchical({d, layers, 1.0, 0.5, NoiseSpec::uniform(0.0, 1.0)});
}

inline SemInstance random_small(std::uint64_t seed, std::size_t max_nodes = 8, std::size_t max_d = 3) {
    Rng rng(seed * 7919 + 17);
    RandomDagSpec spec;
    spec.nodes = 2 + rng() % (max_nodes - 1);
    spec.max_parents = 1 + rng() % max_d;
    spec.seed = seed;
    return random_dag(spec);
}

}  // namespace fixture
