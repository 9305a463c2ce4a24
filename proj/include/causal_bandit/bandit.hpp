#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/intervention_design.hpp"
#include "causal_bandit/sem.hpp"
#include "causal_bandit/structure_learning.hpp"
#include "causal_bandit/trace.hpp"

namespace causal_bandit {

enum class GraphMode {
    unknown_graph,    // learn the skeleton, then design over every arm
    known_graph,      // true parent sets, every arm
    graph_dependent,  // learn the skeleton, arms restricted to the reward node's estimated ancestors
};

inline const char* to_string(GraphMode m) {
    switch (m) {
        case GraphMode::unknown_graph: return "unknown-graph";
        case GraphMode::known_graph: return "known-graph";
        case GraphMode::graph_dependent: return "graph-dependent";
    }
    return "?";
}

inline GraphMode parse_graph_mode(std::string_view s) {
    if (s == "unknown-graph") return GraphMode::unknown_graph;
    if (s == "known-graph") return GraphMode::known_graph;
    if (s == "graph-dependent") return GraphMode::graph_dependent;
    throw ConfigError("unknown graph mode '" + std::string(s) + "'");
}

/// Unset optionals resolve automatically from the instance.
struct BanditConfig {
    std::size_t horizon = 1000;
    GraphMode mode = GraphMode::unknown_graph;
    double delta = 0.05;
    std::optional<double> alpha;
    std::optional<double> lambda;
    std::optional<double> eta;
    std::optional<double> m;
    std::optional<std::size_t> t1;
    std::optional<std::size_t> t2;
    double c = 2.0;
    bool inflate_eigen_term = false;
    /// Seeds the regressor coefficients with the true weights (known graph only).
    bool warm_start = false;
    /// Replaces the default arm universe when non-empty.
    std::vector<Arm> universe;
};

struct ResolvedParams {
    double delta = 0.0;
    double eta = 0.0;
    double m = 0.0;
    double alpha = 0.0;
    std::size_t t1 = 0;
    std::size_t t2 = 0;
    std::optional<double> lambda;  // unset means per-node formula
};

struct BanditResult {
    RegretTrace trace;
    ResolvedParams params;
    SkeletonEstimate skeleton;
    std::optional<StructureResult> structure;
    DesignOutcome design;
    Arm best_arm;
    double best_value = 0.0;
    bool best_arm_survived = false;
};

inline ResolvedParams resolve_params(const SemInstance& inst, const BanditConfig& cfg) {
    if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(cfg.c > 1.0)) throw ConfigError("c must exceed 1");
    ResolvedParams p;
    p.delta = cfg.delta;
    p.m = cfg.m ? *cfg.m : value_bound(inst);
    p.eta = cfg.eta ? *cfg.eta : intervention_margin(inst);
    if (!(p.m > 0.0)) throw ConfigError("m must be positive");
    if (!(p.eta > 0.0)) throw ConfigError("eta must be positive");
    const auto ec = exploration_constants(p.m, p.eta, inst.node_count(), inst.skeleton().max_in_degree(), p.delta, cfg.c);
    p.t1 = cfg.t1 ? *cfg.t1 : ec.t1;
    p.t2 = cfg.t2 ? *cfg.t2 : ec.t2;
    p.lambda = cfg.lambda;
    if (cfg.alpha) p.alpha = *cfg.alpha;
    return p;
}

/// One replication: optional structure learning, then intervention design.
/// Learning rounds count toward the horizon and their samples are replayed
/// into the regressors. Regret is measured against the exact best arm.
inline BanditResult run_bandit(const SemInstance& inst, const BanditConfig& cfg, std::uint64_t seed,
                               const RoundObserver& observer = {}) {
    BanditResult res;
    res.params = resolve_params(inst, cfg);
    auto& p = res.params;
    const std::size_t n = inst.node_count();

    RegretOracle oracle(inst);
    res.best_arm = oracle.best_arm();
    res.best_value = oracle.best_value();

    Environment env(inst, seed);
    std::vector<std::pair<Arm, Eigen::VectorXd>> replay;

    if (cfg.mode == GraphMode::known_graph) {
        res.skeleton = SkeletonEstimate::from_truth(inst.skeleton());
    } else {
        StructureParams sp;
        sp.eta = p.eta;
        sp.t1 = p.t1;
        sp.t2 = p.t2;
        sp.delta = p.delta;
        sp.m = p.m;
        sp.lambda = p.lambda;
        sp.max_rounds = cfg.horizon;
        auto observe = [&](Arm a, const Eigen::VectorXd& x) {
            res.trace.append(a, x(x.size() - 1), oracle.regret(a), 0, RoundMode::learn, 0);
            replay.emplace_back(a, x);
        };
        res.structure = run_structure_learning(env, inst.nu(), sp, observe);
        res.skeleton = res.structure->skeleton;
    }

    if (!cfg.alpha) p.alpha = alpha_default(n, cfg.horizon, p.delta, res.skeleton.max_parents());
    WidthSettings ws;
    ws.alpha = p.alpha;
    ws.scale_init = std::sqrt(static_cast<double>(res.skeleton.max_parents())) * p.m;
    ws.inflate_eigen_term = cfg.inflate_eigen_term;
    DesignModel model(res.skeleton, inst.nu(), ws);

    if (cfg.warm_start) {
        if (cfg.mode != GraphMode::known_graph) throw ConfigError("warm start requires the known-graph mode");
        for (std::size_t i = 0; i < n; ++i) {
            const auto& pa = inst.skeleton().parents(i);
            Eigen::VectorXd obs(static_cast<Eigen::Index>(pa.size())), itv(static_cast<Eigen::Index>(pa.size()));
            for (std::size_t k = 0; k < pa.size(); ++k) {
                const auto j = static_cast<Eigen::Index>(pa[k]);
                obs(static_cast<Eigen::Index>(k)) = inst.b_obs()(j, static_cast<Eigen::Index>(i));
                itv(static_cast<Eigen::Index>(k)) = inst.b_int()(j, static_cast<Eigen::Index>(i));
            }
            model.set_coefficients(i, false, obs);
            model.set_coefficients(i, true, itv);
        }
    }
    for (const auto& [a, x] : replay) model.observe(a, x);
    replay.clear();

    std::vector<Arm> universe = cfg.universe;
    if (universe.empty()) {
        if (cfg.mode == GraphMode::graph_dependent)
            universe = enumerate_arms(res.skeleton.an_hat[n - 1] | node_bit(n - 1));
        else
            universe = enumerate_all_arms(n);
    }

    DesignConfig dc;
    dc.horizon = cfg.horizon;
    dc.m = p.m;
    res.design = run_intervention_design(env, model, std::move(universe), dc, res.trace, &oracle, observer);
    for (const auto& a : res.design.candidates.arms)
        if (oracle.regret(a) == 0.0) res.best_arm_survived = true;
    return res;
}

}  // namespace causal_bandit
