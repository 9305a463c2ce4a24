#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/dag.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/noise.hpp"

namespace causal_bandit {

/// Linear SEM X = B_a^T X + eps with soft interventions. Weight matrices are
/// indexed [from, to]; column i holds the incoming weights of node i.
class SemInstance {
public:
    SemInstance() = default;

    SemInstance(DagSkeleton skeleton, Eigen::MatrixXd b_obs, Eigen::MatrixXd b_int, std::vector<NoiseSpec> noise,
                Eigen::VectorXd nu, double m_b, double m_eps)
        : skeleton_(std::move(skeleton)),
          b_obs_(std::move(b_obs)),
          b_int_(std::move(b_int)),
          noise_(std::move(noise)),
          nu_(std::move(nu)),
          m_b_(m_b),
          m_eps_(m_eps) {
        const auto n = static_cast<Eigen::Index>(skeleton_.node_count());
        if (b_obs_.rows() != n || b_obs_.cols() != n || b_int_.rows() != n || b_int_.cols() != n)
            throw InvalidInstance("weight matrices must be N x N");
        if (static_cast<Eigen::Index>(noise_.size()) != n || nu_.size() != n)
            throw InvalidInstance("noise spec and nu must have one entry per node");
        if (!(m_b_ > 0.0) || !(m_eps_ > 0.0)) throw InvalidInstance("m_b and m_eps must be positive");
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const bool edge = skeleton_.has_edge(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
                if (!edge && (b_obs_(j, i) != 0.0 || b_int_(j, i) != 0.0))
                    throw InvalidInstance("nonzero weight " + std::to_string(j + 1) + "->" + std::to_string(i + 1) +
                                          " without an edge");
                if (std::abs(b_obs_(j, i)) > m_b_ || std::abs(b_int_(j, i)) > m_b_)
                    throw InvalidInstance("weight on " + std::to_string(j + 1) + "->" + std::to_string(i + 1) +
                                          " exceeds m_b");
            }
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mean = noise_[static_cast<std::size_t>(i)].mean();
            if (std::abs(mean - nu_(i)) > 1e-12 * std::max(1.0, std::abs(mean)))
                throw InvalidInstance("nu[" + std::to_string(i + 1) + "] disagrees with the noise mean");
        }
    }

    const DagSkeleton& skeleton() const noexcept { return skeleton_; }
    std::size_t node_count() const noexcept { return skeleton_.node_count(); }
    std::size_t reward_node() const noexcept { return skeleton_.reward_node(); }
    const Eigen::MatrixXd& b_obs() const noexcept { return b_obs_; }
    const Eigen::MatrixXd& b_int() const noexcept { return b_int_; }
    const std::vector<NoiseSpec>& noise() const noexcept { return noise_; }
    const Eigen::VectorXd& nu() const noexcept { return nu_; }
    double m_b() const noexcept { return m_b_; }
    double m_eps() const noexcept { return m_eps_; }

    /// Weight of edge j -> i under the arm.
    double weight(Arm arm, std::size_t j, std::size_t i) const {
        const auto& b = arm.contains(i) ? b_int_ : b_obs_;
        return b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }

private:
    DagSkeleton skeleton_;
    Eigen::MatrixXd b_obs_;
    Eigen::MatrixXd b_int_;
    std::vector<NoiseSpec> noise_;
    Eigen::VectorXd nu_;
    double m_b_ = 1.0;
    double m_eps_ = 1.0;
};

/// Column i taken from B* when i is in the arm, else from B.
inline Eigen::MatrixXd arm_matrix(const SemInstance& inst, Arm arm) {
    Eigen::MatrixXd out = inst.b_obs();
    for (auto i : arm.members())
        if (i < inst.node_count()) out.col(static_cast<Eigen::Index>(i)) = inst.b_int().col(static_cast<Eigen::Index>(i));
    return out;
}

/// One realization. All N noises are drawn first, in index order, then
/// propagated in topological order.
inline Eigen::VectorXd sample(const SemInstance& inst, Arm arm, Rng& rng) {
    const std::size_t n = inst.node_count();
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = inst.noise()[i].sample(rng);
    for (auto i : inst.skeleton().order()) {
        double acc = x(static_cast<Eigen::Index>(i));
        for (auto j : inst.skeleton().parents(i)) acc += inst.weight(arm, j, i) * x(static_cast<Eigen::Index>(j));
        x(static_cast<Eigen::Index>(i)) = acc;
    }
    return x;
}

inline Eigen::VectorXd sample(const SemInstance& inst, Arm arm, std::uint64_t seed) {
    Rng rng(seed);
    return sample(inst, arm, rng);
}

/// f_i(B_a): entry j sums the weight products of every directed path j ~> i,
/// with the empty path contributing 1 at j = i. Forward recursion
/// f_i = e_i + sum_{j in Pa(i)} [B_a]_{j,i} f_j.
inline Eigen::VectorXd path_sum(const SemInstance& inst, Arm arm, std::size_t node) {
    const auto n = static_cast<Eigen::Index>(inst.node_count());
    const NodeMask needed = inst.skeleton().ancestors(node) | node_bit(node);
    std::vector<Eigen::VectorXd> f(inst.node_count());
    for (auto i : inst.skeleton().order()) {
        if ((needed & node_bit(i)) == 0) continue;
        Eigen::VectorXd fi = Eigen::VectorXd::Unit(n, static_cast<Eigen::Index>(i));
        for (auto j : inst.skeleton().parents(i)) fi += inst.weight(arm, j, i) * f[j];
        f[i] = std::move(fi);
        if (i == node) break;
    }
    return f[node];
}

/// mu_{i,a} for every node i, via mu_i = nu_i + sum_j [B_a]_{j,i} mu_j
/// (equal to <f_i(B_a), nu>).
inline Eigen::VectorXd exact_means(const SemInstance& inst, Arm arm) {
    Eigen::VectorXd mu = inst.nu();
    for (auto i : inst.skeleton().order()) {
        double acc = inst.nu()(static_cast<Eigen::Index>(i));
        for (auto j : inst.skeleton().parents(i)) acc += inst.weight(arm, j, i) * mu(static_cast<Eigen::Index>(j));
        mu(static_cast<Eigen::Index>(i)) = acc;
    }
    return mu;
}

inline double exact_mean(const SemInstance& inst, Arm arm, std::size_t node) {
    return exact_means(inst, arm)(static_cast<Eigen::Index>(node));
}

struct BestArm {
    Arm arm;
    double value;
};

/// Every arm over An(N) + {N}. Nodes outside that set cannot move the
/// reward, so this family always contains a global maximizer.
inline std::vector<Arm> reward_relevant_arms(const SemInstance& inst) {
    return enumerate_arms(inst.skeleton().ancestors(inst.reward_node()) | node_bit(inst.reward_node()));
}

/// Maximizer of mu_{N,a}. Exact ties go to the first arm in canonical order.
/// With no candidate list the full power set is searched, which throws
/// TooManyArms above the enumeration guard.
inline BestArm best_arm_brute_force(const SemInstance& inst, std::span<const Arm> candidates = {}) {
    std::vector<Arm> owned;
    if (candidates.empty()) {
        owned = enumerate_all_arms(inst.node_count());
        candidates = owned;
    }
    BestArm best{candidates.front(), -std::numeric_limits<double>::infinity()};
    for (const Arm a : candidates) {
        const double v = exact_mean(inst, a, inst.reward_node());
        if (v > best.value || (v == best.value && canonical_less(a, best.arm))) best = {a, v};
    }
    return best;
}

/// Smallest mean shift that a single soft intervention on a non-root node i
/// causes at i itself or at any of its descendants. +inf when no node has a
/// parent.
inline double intervention_margin(const SemInstance& inst) {
    double eta = std::numeric_limits<double>::infinity();
    const Eigen::VectorXd base = exact_means(inst, Arm{});
    for (std::size_t i = 0; i < inst.node_count(); ++i) {
        if (inst.skeleton().depth(i) == 0) continue;
        const Eigen::VectorXd shifted = exact_means(inst, Arm::single(i));
        for (auto j : mask_members(inst.skeleton().descendants(i) | node_bit(i))) {
            const auto k = static_cast<Eigen::Index>(j);
            eta = std::min(eta, std::abs(base(k) - shifted(k)));
        }
    }
    return eta;
}

/// m = m_eps * sum_{l=0}^{L} (d m_b)^l, a bound on ||X||_inf under any arm.
inline double value_bound(const SemInstance& inst) {
    const double growth = static_cast<double>(inst.skeleton().max_in_degree()) * inst.m_b();
    double term = 1.0;
    double total = 0.0;
    for (std::size_t l = 0; l <= inst.skeleton().max_depth(); ++l) {
        total += term;
        term *= growth;
    }
    return inst.m_eps() * total;
}

/// Assumption checks that are not structural: bounded noise within m_eps and
/// a strictly positive intervention margin.
struct AssumptionReport {
    bool noise_bounded = true;
    bool margin_positive = true;
    double margin = 0.0;
    std::string message;

    bool ok() const noexcept { return noise_bounded && margin_positive; }
};

inline AssumptionReport check_assumptions(const SemInstance& inst) {
    AssumptionReport r;
    for (std::size_t i = 0; i < inst.node_count(); ++i) {
        if (inst.noise()[i].magnitude_bound() > inst.m_eps()) {
            r.noise_bounded = false;
            r.message += "noise of node " + std::to_string(i + 1) + " exceeds m_eps; ";
        }
    }
    r.margin = intervention_margin(inst);
    if (!(r.margin > 0.0)) {
        r.margin_positive = false;
        r.message += "intervention margin is not positive; ";
    }
    return r;
}

/// Draws realizations from a fixed instance with its own RNG stream.
class Environment {
public:
    Environment(const SemInstance& inst, std::uint64_t seed) : inst_(&inst), rng_(seed) {}

    std::size_t node_count() const noexcept { return inst_->node_count(); }
    Eigen::VectorXd pull(Arm arm) { return sample(*inst_, arm, rng_); }
    const SemInstance& instance() const noexcept { return *inst_; }

private:
    const SemInstance* inst_;
    Rng rng_;
};

}  // namespace causal_bandit
