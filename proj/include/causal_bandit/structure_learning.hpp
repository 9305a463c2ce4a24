#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/dag.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/lasso.hpp"
#include "causal_bandit/sem.hpp"

namespace causal_bandit {

/// Called with every arm played and the realization it produced.
using PullObserver = std::function<void(Arm, const Eigen::VectorXd&)>;

struct ExplorationConstants {
    std::size_t t1;
    std::size_t t2;
};

/// T1 = ceil(32 m^2 / eta^2 * log(2 N^2 / delta)), floored at 1;
/// T2 = ceil(c d log N).
inline ExplorationConstants exploration_constants(double m, double eta, std::size_t node_count, std::size_t d,
                                                  double delta, double c = 2.0) {
    if (!(m > 0.0) || !(eta > 0.0)) throw ConfigError("exploration constants need m > 0 and eta > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("exploration constants need 0 < delta < 1");
    if (!(c > 1.0)) throw ConfigError("exploration constant c must exceed 1");
    const double nn = static_cast<double>(node_count);
    const double t1 = std::ceil(32.0 * m * m / (eta * eta) * std::log(2.0 * nn * nn / delta));
    const double t2 = std::ceil(c * static_cast<double>(d) * std::log(nn));
    return {std::max<std::size_t>(1, static_cast<std::size_t>(t1)), static_cast<std::size_t>(std::max(0.0, t2))};
}

/// Running means for the probe arms {} and {1}, ..., {N-1}. Probe p = 0 is
/// the empty arm, probe p >= 1 intervenes on node p-1 (0-based).
class MeanTable {
public:
    explicit MeanTable(std::size_t node_count)
        : n_(node_count), sums_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(node_count),
                                                        static_cast<Eigen::Index>(node_count))),
          counts_(node_count, 0) {}

    std::size_t node_count() const noexcept { return n_; }
    std::size_t probe_count() const noexcept { return n_; }

    static Arm probe_arm(std::size_t probe) { return probe == 0 ? Arm{} : Arm::single(probe - 1); }

    void add(std::size_t probe, const Eigen::VectorXd& x) {
        sums_.col(static_cast<Eigen::Index>(probe)) += x;
        ++counts_[probe];
    }

    std::size_t count(std::size_t probe) const { return counts_[probe]; }
    double sum(std::size_t probe, std::size_t node) const {
        return sums_(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(probe));
    }
    double mean(std::size_t probe, std::size_t node) const {
        return counts_[probe] == 0 ? 0.0 : sum(probe, node) / static_cast<double>(counts_[probe]);
    }
    std::size_t total_count() const {
        std::size_t t = 0;
        for (auto c : counts_) t += c;
        return t;
    }

private:
    std::size_t n_;
    Eigen::MatrixXd sums_;  // node x probe
    std::vector<std::size_t> counts_;
};

/// One sweep: {} then {1}, ..., {N-1}.
template <typename Env>
void probe_round(Env& env, MeanTable& table, const PullObserver& observer = {}) {
    for (std::size_t p = 0; p < table.probe_count(); ++p) {
        const Arm arm = MeanTable::probe_arm(p);
        const Eigen::VectorXd x = env.pull(arm);
        table.add(p, x);
        if (observer) observer(arm, x);
    }
}

/// de_hat(i) = { j : |mu_{j,{}} - mu_{j,{i}}| > eta/2 } for i < N-1. The reward
/// node is never probed and is taken as a sink: de_hat(N) = {N}.
inline std::vector<NodeMask> estimate_descendants(const MeanTable& table, double eta) {
    const std::size_t n = table.node_count();
    std::vector<NodeMask> de(n, 0);
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(table.mean(0, j) - table.mean(i + 1, j)) > 0.5 * eta) de[i] |= node_bit(j);
    de[n - 1] = node_bit(n - 1);
    return de;
}

/// an_hat(i) = { j != i : de_hat(j) empty or i in de_hat(j) }
inline std::vector<NodeMask> estimate_ancestors(const std::vector<NodeMask>& de) {
    const std::size_t n = de.size();
    std::vector<NodeMask> an(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (j != i && (de[j] == 0 || (de[j] & node_bit(i)) != 0)) an[i] |= node_bit(j);
    return an;
}

/// False iff some pair i != j has j in de_hat(i) and i in de_hat(j).
inline bool dag_consistent(const std::vector<NodeMask>& de) {
    for (std::size_t i = 0; i < de.size(); ++i)
        for (auto j : mask_members(de[i]))
            if (j != i && (de[j] & node_bit(i)) != 0) return false;
    return true;
}

/// Nodes with empty de_hat first (ascending), then repeatedly the smallest
/// node whose non-root estimated ancestors are all placed. A leftover cycle
/// (possible only with inconsistent estimates) is broken at its smallest node.
inline std::vector<std::size_t> order_from_ancestors(const std::vector<NodeMask>& de, const std::vector<NodeMask>& an) {
    const std::size_t n = de.size();
    NodeMask roots = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (de[i] == 0) roots |= node_bit(i);
    std::vector<std::size_t> order = mask_members(roots);
    NodeMask placed = roots;
    while (order.size() < n) {
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < n && !pick; ++i)
            if ((placed & node_bit(i)) == 0 && (an[i] & ~placed) == 0) pick = i;
        if (!pick)
            for (std::size_t i = 0; i < n && !pick; ++i)
                if ((placed & node_bit(i)) == 0) pick = i;
        order.push_back(*pick);
        placed |= node_bit(*pick);
    }
    return order;
}

struct SkeletonEstimate {
    std::vector<NodeMask> de_hat;
    std::vector<NodeMask> an_hat;
    std::vector<std::vector<std::size_t>> pa_hat;
    std::vector<std::size_t> order;

    std::size_t node_count() const noexcept { return pa_hat.size(); }
    std::size_t max_parents() const {
        std::size_t d = 0;
        for (const auto& p : pa_hat) d = std::max(d, p.size());
        return d;
    }

    /// The true graph, as if learned perfectly.
    static SkeletonEstimate from_truth(const DagSkeleton& g) {
        SkeletonEstimate s;
        const std::size_t n = g.node_count();
        s.pa_hat = g.parent_lists();
        s.order = g.order();
        s.de_hat.resize(n);
        s.an_hat.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.de_hat[i] = g.depth(i) == 0 ? 0 : (g.descendants(i) | node_bit(i));
            s.an_hat[i] = g.ancestors(i);
        }
        return s;
    }
};

struct RecoveryDiagnostics {
    bool order_valid = false;
    bool parents_contained = false;
    std::vector<double> kappa;  // |pa_hat(i)| / |Pa(i)|, NaN for parentless nodes
};

inline RecoveryDiagnostics recovery_diagnostics(const SkeletonEstimate& est, const DagSkeleton& truth) {
    RecoveryDiagnostics r;
    r.order_valid = is_valid_order(truth.parent_lists(), est.order);
    r.parents_contained = true;
    for (std::size_t i = 0; i < truth.node_count(); ++i) {
        const auto& hat = est.pa_hat[i];
        for (auto p : truth.parents(i))
            if (std::find(hat.begin(), hat.end(), p) == hat.end()) r.parents_contained = false;
        r.kappa.push_back(truth.parents(i).empty() ? std::numeric_limits<double>::quiet_NaN()
                                                   : static_cast<double>(hat.size()) /
                                                         static_cast<double>(truth.parents(i).size()));
    }
    return r;
}

struct StructureParams {
    double eta = 0.0;
    std::size_t t1 = 1;
    std::size_t t2 = 0;
    double delta = 0.05;
    double m = 1.0;                 // bound on |X_i|, used in the Lasso penalty
    std::optional<double> lambda;   // overrides the penalty formula
    std::size_t max_rounds = std::numeric_limits<std::size_t>::max();
    double lasso_tolerance = 1e-8;
    std::size_t lasso_max_sweeps = 100000;
};

struct StructureResult {
    SkeletonEstimate skeleton;
    MeanTable table;
    std::size_t sweeps = 0;
    std::size_t topup_rounds = 0;
    std::size_t rounds_used = 0;
    std::vector<double> lambdas;        // per node, 0 when no ancestors
    std::vector<double> kkt_residuals;  // per node
};

/// Intervention-based skeleton learning. Probe sweeps run until the
/// descendant estimates are mutually consistent and at least T1 sweeps have
/// been played; observational pulls then top up to max(T1, T2); a Lasso of
/// X_i - nu_i on the estimated ancestors gives the parent sets.
template <typename Env>
StructureResult run_structure_learning(Env& env, const Eigen::VectorXd& nu, const StructureParams& params,
                                       const PullObserver& observer = {}) {
    const std::size_t n = env.node_count();
    if (!(params.eta > 0.0)) throw ConfigError("structure learning needs eta > 0");
    StructureResult res{SkeletonEstimate{}, MeanTable(n), 0, 0, 0, {}, {}};

    std::vector<double> obs_rows;  // row-major, N values per observational pull
    auto record = [&](Arm arm, const Eigen::VectorXd& x) {
        if (arm.empty()) obs_rows.insert(obs_rows.end(), x.data(), x.data() + x.size());
        if (observer) observer(arm, x);
    };

    std::vector<NodeMask> de;
    while (true) {
        if (res.rounds_used + n > params.max_rounds)
            throw BudgetExceeded("structure learning hit the round cap of " + std::to_string(params.max_rounds) +
                                 " before the descendant estimates became consistent");
        probe_round(env, res.table, record);
        ++res.sweeps;
        res.rounds_used += n;
        if (res.sweeps >= params.t1) {
            de = estimate_descendants(res.table, params.eta);
            if (dag_consistent(de)) break;
        }
    }
    const std::size_t target = std::max(params.t1, params.t2);
    while (res.table.count(0) < target) {
        if (res.rounds_used + 1 > params.max_rounds)
            throw BudgetExceeded("structure learning hit the round cap during observational top-up");
        const Eigen::VectorXd x = env.pull(Arm{});
        res.table.add(0, x);
        record(Arm{}, x);
        ++res.topup_rounds;
        ++res.rounds_used;
    }

    auto& sk = res.skeleton;
    sk.de_hat = de;
    sk.an_hat = estimate_ancestors(de);
    sk.order = order_from_ancestors(sk.de_hat, sk.an_hat);
    std::vector<std::size_t> pos(n);
    for (std::size_t k = 0; k < n; ++k) pos[sk.order[k]] = k;

    const std::size_t rows = obs_rows.size() / n;
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> data(
        obs_rows.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));

    sk.pa_hat.assign(n, {});
    res.lambdas.assign(n, 0.0);
    res.kkt_residuals.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto an = mask_members(sk.an_hat[i]);
        if (an.empty()) continue;
        LassoProblem prob;
        prob.design.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(an.size()));
        for (std::size_t k = 0; k < an.size(); ++k)
            prob.design.col(static_cast<Eigen::Index>(k)) = data.col(static_cast<Eigen::Index>(an[k]));
        prob.response = data.col(static_cast<Eigen::Index>(i)).array() - nu(static_cast<Eigen::Index>(i));
        prob.lambda = params.lambda ? *params.lambda : lasso_lambda(params.m, n, an.size(), params.delta, rows);
        prob.tolerance = params.lasso_tolerance;
        prob.max_sweeps = params.lasso_max_sweeps;
        const LassoFit fit = lasso_fit(prob);
        res.lambdas[i] = prob.lambda;
        res.kkt_residuals[i] = fit.kkt_residual;
        for (std::size_t k = 0; k < an.size(); ++k)
            // Parents must precede the child in the returned order.
            if (fit.coef(static_cast<Eigen::Index>(k)) != 0.0 && pos[an[k]] < pos[i]) sk.pa_hat[i].push_back(an[k]);
    }
    return res;
}

}  // namespace causal_bandit
