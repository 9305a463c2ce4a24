#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/bandit.hpp"
#include "causal_bandit/lasso.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

// Randomized invariants shared by the property unit test and the acceptance run.
namespace property {

using namespace causal_bandit;

inline constexpr std::size_t kCases = 200;

class Failures {
public:
    explicit Failures(std::uint64_t seed) : seed_(seed) {}
    void check(bool ok, const std::string& what) {
        if (!ok) list_.push_back("seed " + std::to_string(seed_) + ": " + what);
    }
    const std::vector<std::string>& list() const { return list_; }

private:
    std::uint64_t seed_;
    std::vector<std::string> list_;
};

inline bool subset(const std::vector<Arm>& inner, const std::vector<Arm>& outer) {
    for (auto a : inner)
        if (std::find(outer.begin(), outer.end(), a) == outer.end()) return false;
    return true;
}

inline void check_sem(const SemInstance& inst, Rng& rng, Failures& f) {
    const std::size_t n = inst.node_count();
    const Arm arm(static_cast<NodeMask>(rng() & ((NodeMask{1} << n) - 1)));
    const Eigen::VectorXd mu = exact_means(inst, arm);
    f.check((mu - oracle::means_by_solve(inst, arm)).cwiseAbs().maxCoeff() <= 1e-10, "means differ from the linear solve");
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd fi = path_sum(inst, arm, i);
        f.check((fi - oracle::path_sum_powers(inst, arm, i)).cwiseAbs().maxCoeff() <= 1e-10,
                "path sum differs from the power series at node " + std::to_string(i + 1));
        f.check(std::abs(fi.dot(inst.nu()) - mu(static_cast<Eigen::Index>(i))) <= 1e-10,
                "path-sum duality fails at node " + std::to_string(i + 1));
    }

    // With the true weights loaded, the plug-in estimator reproduces the exact means.
    DesignModel model(SkeletonEstimate::from_truth(inst.skeleton()), inst.nu(), WidthSettings{});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pa = inst.skeleton().parents(i);
        Eigen::VectorXd co(static_cast<Eigen::Index>(pa.size())), ci(co.size());
        for (std::size_t k = 0; k < pa.size(); ++k) {
            co(static_cast<Eigen::Index>(k)) = inst.b_obs()(static_cast<Eigen::Index>(pa[k]), static_cast<Eigen::Index>(i));
            ci(static_cast<Eigen::Index>(k)) = inst.b_int()(static_cast<Eigen::Index>(pa[k]), static_cast<Eigen::Index>(i));
        }
        model.set_coefficients(i, false, co);
        model.set_coefficients(i, true, ci);
    }
    f.check((estimate_arm_mean(model, arm) - mu).cwiseAbs().maxCoeff() <= 1e-10,
            "plug-in estimator with true weights differs from the exact means");
}

inline void check_lasso(Rng& rng, Failures& f) {
    std::normal_distribution<double> z(0.0, 1.0);
    const auto rows = static_cast<Eigen::Index>(20 + rng() % 60);
    const auto cols = static_cast<Eigen::Index>(1 + rng() % 6);
    LassoProblem p;
    p.design.resize(rows, cols);
    p.response.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) p.design(r, c) = z(rng);
        p.response(r) = p.design(r, 0) * 0.8 + 0.3 * z(rng);
    }
    p.lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto fit = lasso_fit(p);
    f.check(lasso_kkt_residual(p, fit.coef) <= 1e-6, "Lasso KKT residual above 1e-6");
}

inline void check_design(const SemInstance& inst, std::uint64_t seed, Failures& f) {
    BanditConfig cfg;
    cfg.mode = GraphMode::known_graph;
    cfg.horizon = 200 + seed % 300;
    // Small alphas lock onto an arm in the first round at these horizons, so
    // mix the default scale with fixed values large enough to explore.
    if (seed % 2 == 1) cfg.alpha = 0.5 + 0.1 * static_cast<double>(seed % 10);

    std::vector<Arm> prev;
    bool first = true, nested = true;
    const auto watch = [&](const RoundSnapshot& s) {
        std::vector<Arm> now(s.arms.begin(), s.arms.end());
        if (!first && !subset(now, prev)) nested = false;
        prev = std::move(now);
        first = false;
    };
    const auto a = run_bandit(inst, cfg, seed, watch);
    const auto b = run_bandit(inst, cfg, seed);

    f.check(nested, "candidate sets are not nested");
    f.check(a.trace.rows.size() == cfg.horizon, "trace length differs from the horizon");
    f.check(a.design.candidates.stage <= a.design.stage_cap, "stage exceeded its cap");
    f.check(a.design.min_eigenvalue >= 1.0 - 1e-12, "a gram eigenvalue fell below 1");
    double prev_cum = 0.0;
    bool nonneg = true, monotone = true;
    for (const auto& r : a.trace.rows) {
        nonneg = nonneg && r.inst_regret >= 0.0;
        monotone = monotone && r.cum_regret >= prev_cum;
        prev_cum = r.cum_regret;
    }
    f.check(nonneg, "negative instantaneous regret");
    f.check(monotone, "cumulative regret decreased");
    bool same = a.trace.rows.size() == b.trace.rows.size();
    for (std::size_t t = 0; same && t < a.trace.rows.size(); ++t)
        same = a.trace.rows[t].arm == b.trace.rows[t].arm && a.trace.rows[t].reward == b.trace.rows[t].reward;
    f.check(same, "same seed gave a different trace");
}

/// All invariants for one randomized case; returns the violations.
inline std::vector<std::string> check_case(std::uint64_t seed) {
    Failures f(seed);
    const auto inst = fixture::random_small(seed);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    check_sem(inst, rng, f);
    check_lasso(rng, f);
    check_design(inst, seed, f);
    return f.list();
}

}  // namespace property
