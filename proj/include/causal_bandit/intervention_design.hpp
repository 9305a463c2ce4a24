#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/dag.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/regressor.hpp"
#include "causal_bandit/structure_learning.hpp"
#include "causal_bandit/trace.hpp"

namespace causal_bandit {

/// alpha = sqrt(log(N T / delta) / 2) + sqrt(d_hat)
inline double alpha_default(std::size_t node_count, std::size_t horizon, double delta, std::size_t d_hat) {
    const double arg = static_cast<double>(node_count) * static_cast<double>(horizon) / delta;
    return std::sqrt(0.5 * std::max(0.0, std::log(arg))) + std::sqrt(static_cast<double>(d_hat));
}

/// S = ceil(log2 sqrt(T)), at least 1.
inline std::size_t stage_cap(std::size_t horizon) {
    const double s = std::ceil(0.5 * std::log2(static_cast<double>(std::max<std::size_t>(horizon, 1))));
    return std::max<std::size_t>(1, static_cast<std::size_t>(s));
}

struct WidthSettings {
    double alpha = 0.1;
    /// Per-depth parent-norm scale used until a sample of that depth is seen.
    double scale_init = 1.0;
    /// Multiplies the eigenvalue term by sqrt(2).
    bool inflate_eigen_term = false;
};

/// Per-node ridge regressors plus the recursive mean and width evaluation
/// over a (possibly estimated) skeleton. Nodes that cannot reach the reward
/// node are skipped on the fast path since they never affect it.
class DesignModel {
public:
    struct ArmEstimate {
        double mean;
        double width;
    };

    /// Scratch buffers for evaluate(); one per thread.
    struct Workspace {
        std::vector<double> mu;
        std::vector<double> w;
        std::vector<double> tmp;
    };

    DesignModel(const SkeletonEstimate& skeleton, const Eigen::VectorXd& nu, WidthSettings settings)
        : n_(skeleton.node_count()), nu_(nu), settings_(settings), order_(skeleton.order) {
        if (!is_valid_order(skeleton.pa_hat, skeleton.order))
            throw Error("skeleton order is inconsistent with its parent sets");
        depth_ = depths_along(skeleton.pa_hat, order_);
        max_depth_ = order_.empty() ? 0 : *std::max_element(depth_.begin(), depth_.end());
        scale_.assign(max_depth_ + 1, std::nullopt);

        NodeMask relevant = node_bit(n_ - 1);
        for (auto it = order_.rbegin(); it != order_.rend(); ++it)
            if ((relevant & node_bit(*it)) != 0)
                for (auto p : skeleton.pa_hat[*it]) relevant |= node_bit(p);
        for (auto v : order_)
            if ((relevant & node_bit(v)) != 0) relevant_order_.push_back(v);

        regs_.reserve(n_);
        cache_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            regs_.emplace_back(skeleton.pa_hat[i], nu(static_cast<Eigen::Index>(i)));
            refresh_cache(i, false);
            refresh_cache(i, true);
        }
    }

    std::size_t node_count() const noexcept { return n_; }
    std::size_t reward_node() const noexcept { return n_ - 1; }
    const WidthSettings& settings() const noexcept { return settings_; }
    void set_alpha(double alpha) { settings_.alpha = alpha; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    const std::vector<std::size_t>& relevant_order() const noexcept { return relevant_order_; }
    std::size_t depth(std::size_t i) const { return depth_[i]; }
    const NodeRegressor& regressor(std::size_t i) const { return regs_[i]; }

    /// m_{Pa,l}: running max of ||X_Pa(i)|| over nodes of depth l.
    double depth_scale(std::size_t depth) const {
        if (depth == 0) return 0.0;
        return scale_[depth] ? *scale_[depth] : settings_.scale_init;
    }

    /// Feeds one round to every node: the side is chosen by the arm.
    void observe(Arm arm, const Eigen::VectorXd& x) {
        for (std::size_t i = 0; i < n_; ++i) {
            const bool side = arm.contains(i);
            regs_[i].observe(side, x, i);
            if (regs_[i].parent_count() == 0) continue;
            refresh_cache(i, side);
            double sq = 0.0;
            for (auto p : regs_[i].parents()) sq += x(static_cast<Eigen::Index>(p)) * x(static_cast<Eigen::Index>(p));
            auto& s = scale_[depth_[i]];
            s = std::max(s.value_or(0.0), std::sqrt(sq));
        }
    }

    void set_coefficients(std::size_t node, bool intervened, const Eigen::VectorXd& coef) {
        regs_[node].set_coefficients(intervened, coef);
        refresh_cache(node, intervened);
    }

    /// Smallest eigenvalue over all parent-block grams (1 for parentless nodes).
    double min_effective_eigenvalue() const {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& r : regs_) {
            if (r.parent_count() == 0) {
                lo = std::min(lo, 1.0);
                continue;
            }
            lo = std::min({lo, r.observational().lambda_min, r.interventional().lambda_min});
        }
        return lo;
    }

    /// mu_hat_{i,a} = nu_i + sum_{j in Pa(i)} [B_a(t)]_{j,i} mu_hat_{j,a} and
    /// w_{i,a} = sum_{j in Pa(i)} w_{j,a}
    ///         + alpha (||mu_hat_Pa(i)||_{V^{-1}} + m_{Pa,L_i} lambda_min(V)^{-1/2}),
    /// V being the gram of the side selected by a_i. Fills ws.mu and ws.w.
    ArmEstimate evaluate(Arm arm, Workspace& ws, bool all_nodes = false) const {
        ws.mu.resize(n_);
        ws.w.resize(n_);
        const double eig_factor = settings_.inflate_eigen_term ? std::sqrt(2.0) : 1.0;
        for (auto i : all_nodes ? order_ : relevant_order_) {
            const NodeCache& nc = cache_[i];
            const std::size_t k = nc.parents.size();
            if (k == 0) {
                ws.mu[i] = nc.nu;
                ws.w[i] = 0.0;
                continue;
            }
            const SideCache& sc = nc.side[arm.contains(i) ? 1 : 0];
            ws.tmp.resize(k);
            double mean = nc.nu;
            double wsum = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double mp = ws.mu[nc.parents[c]];
                ws.tmp[c] = mp;
                mean += sc.coef[c] * mp;
                wsum += ws.w[nc.parents[c]];
            }
            // ||v||_{V^-1} = ||L^{-1} v|| with V = L L^T.
            double q = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                double s = ws.tmp[r];
                for (std::size_t c = 0; c < r; ++c) s -= sc.chol[r * k + c] * ws.tmp[c];
                s /= sc.chol[r * k + r];
                ws.tmp[r] = s;
                q += s * s;
            }
            ws.mu[i] = mean;
            ws.w[i] = wsum + settings_.alpha * (std::sqrt(q) + depth_scale(nc.depth) * eig_factor * sc.inv_sqrt_lmin);
        }
        return {ws.mu[n_ - 1], ws.w[n_ - 1]};
    }

private:
    struct SideCache {
        std::vector<double> chol;  // row-major lower factor
        std::vector<double> coef;
        double inv_sqrt_lmin = 1.0;
    };
    struct NodeCache {
        std::vector<std::size_t> parents;
        std::size_t depth = 0;
        double nu = 0.0;
        SideCache side[2];
    };

    void refresh_cache(std::size_t i, bool intervened) {
        NodeCache& nc = cache_[i];
        const NodeRegressor& r = regs_[i];
        nc.parents = r.parents();
        nc.depth = depth_[i];
        nc.nu = r.nu();
        const auto& s = r.side(intervened);
        SideCache& sc = nc.side[intervened ? 1 : 0];
        const std::size_t k = r.parent_count();
        sc.chol.assign(k * k, 0.0);
        sc.coef.assign(k, 0.0);
        for (std::size_t a = 0; a < k; ++a) {
            sc.coef[a] = s.coef(static_cast<Eigen::Index>(a));
            for (std::size_t b = 0; b <= a; ++b) sc.chol[a * k + b] = s.chol(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
        sc.inv_sqrt_lmin = 1.0 / std::sqrt(s.lambda_min);
    }

    std::size_t n_;
    Eigen::VectorXd nu_;
    WidthSettings settings_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> relevant_order_;
    std::vector<std::size_t> depth_;
    std::size_t max_depth_ = 0;
    std::vector<std::optional<double>> scale_;
    std::vector<NodeRegressor> regs_;
    std::vector<NodeCache> cache_;
};

/// Per-node mean estimates under an arm (all nodes).
inline Eigen::VectorXd estimate_arm_mean(const DesignModel& model, Arm arm) {
    DesignModel::Workspace ws;
    model.evaluate(arm, ws, true);
    return Eigen::Map<const Eigen::VectorXd>(ws.mu.data(), static_cast<Eigen::Index>(ws.mu.size()));
}

/// Per-node UCB widths under an arm (all nodes).
inline Eigen::VectorXd arm_widths(const DesignModel& model, Arm arm) {
    DesignModel::Workspace ws;
    model.evaluate(arm, ws, true);
    return Eigen::Map<const Eigen::VectorXd>(ws.w.data(), static_cast<Eigen::Index>(ws.w.size()));
}

struct EliminationEvent {
    std::size_t stage;
    double threshold;
    std::vector<Arm> removed;
};

struct CandidateSet {
    std::size_t stage = 1;
    std::vector<Arm> arms;
    std::vector<EliminationEvent> history;
};

/// Keeps the arms whose UCB is within m 2^{1-s} of the best (inclusive) and
/// advances the stage. `keep` receives the surviving positions when given.
inline CandidateSet eliminate(const CandidateSet& cand, std::span<const double> ucb, double m,
                              std::vector<std::size_t>* keep = nullptr) {
    if (ucb.size() != cand.arms.size()) throw Error("eliminate: one UCB per candidate required");
    const double best = *std::max_element(ucb.begin(), ucb.end());
    const double threshold = best - m * std::ldexp(1.0, 1 - static_cast<int>(cand.stage));
    CandidateSet next;
    next.stage = cand.stage + 1;
    next.history = cand.history;
    EliminationEvent ev{cand.stage, threshold, {}};
    if (keep) keep->clear();
    for (std::size_t k = 0; k < cand.arms.size(); ++k) {
        if (ucb[k] >= threshold) {
            next.arms.push_back(cand.arms[k]);
            if (keep) keep->push_back(k);
        } else {
            ev.removed.push_back(cand.arms[k]);
        }
    }
    next.history.push_back(std::move(ev));
    return next;
}

struct Selection {
    Arm arm;
    RoundMode mode;
    bool lock = false;  // exploit for all remaining rounds
};

/// One decision of the phased-elimination rule. `widths` and `ucbs` are
/// aligned with cand.arms and are filtered alongside it on elimination.
///  - every width <= m / sqrt(T): lock onto the max-UCB arm;
///  - while every width <= m 2^{-s}: eliminate and advance s;
///  - otherwise play the first candidate whose width exceeds m 2^{-s}.
inline Selection select_arm(CandidateSet& cand, std::vector<double>& widths, std::vector<double>& ucbs, double m,
                            std::size_t horizon) {
    if (cand.arms.empty()) throw std::logic_error("empty candidate set");
    const double stop = m / std::sqrt(static_cast<double>(horizon));
    auto all_below = [&](double t) { return std::all_of(widths.begin(), widths.end(), [t](double w) { return w <= t; }); };
    auto exploit = [&](RoundMode) {
        const auto best = std::max_element(ucbs.begin(), ucbs.end()) - ucbs.begin();
        return Selection{cand.arms[static_cast<std::size_t>(best)], RoundMode::exploit, true};
    };
    if (all_below(stop)) return exploit(RoundMode::exploit);

    bool eliminated = false;
    std::vector<std::size_t> keep;
    while (all_below(m * std::ldexp(1.0, -static_cast<int>(cand.stage)))) {
        cand = eliminate(cand, ucbs, m, &keep);
        std::vector<double> w2, u2;
        for (auto k : keep) {
            w2.push_back(widths[k]);
            u2.push_back(ucbs[k]);
        }
        widths.swap(w2);
        ucbs.swap(u2);
        eliminated = true;
        if (cand.arms.empty()) throw std::logic_error("elimination removed every arm");
        if (all_below(stop)) return exploit(RoundMode::exploit);
    }
    const double bar = m * std::ldexp(1.0, -static_cast<int>(cand.stage));
    for (std::size_t k = 0; k < cand.arms.size(); ++k)
        if (widths[k] > bar) return {cand.arms[k], eliminated ? RoundMode::eliminate : RoundMode::explore, false};
    throw std::logic_error("no under-explored arm after elimination");
}

struct RoundSnapshot {
    std::size_t round;  // 1-based round about to be played
    std::size_t stage;
    std::span<const Arm> arms;
    std::span<const double> means;
    std::span<const double> widths;
};

using RoundObserver = std::function<void(const RoundSnapshot&)>;

struct DesignConfig {
    std::size_t horizon = 1;
    double m = 1.0;
};

struct DesignOutcome {
    CandidateSet candidates;
    std::optional<Arm> locked_arm;
    std::size_t stage_cap = 1;
    double min_eigenvalue = std::numeric_limits<double>::infinity();
};

/// Phased-elimination intervention design. Appends rows to `trace` until it
/// holds cfg.horizon rounds; rows already present (structure learning) count
/// toward the horizon.
template <typename Env>
DesignOutcome run_intervention_design(Env& env, DesignModel& model, std::vector<Arm> universe, const DesignConfig& cfg,
                                      RegretTrace& trace, RegretOracle* oracle = nullptr,
                                      const RoundObserver& observer = {}) {
    DesignOutcome out;
    out.stage_cap = stage_cap(cfg.horizon);
    out.candidates.arms = std::move(universe);
    out.min_eigenvalue = model.min_effective_eigenvalue();
    auto regret = [&](Arm a) -> std::optional<double> {
        if (!oracle) return std::nullopt;
        return oracle->regret(a);
    };

    DesignModel::Workspace ws;
    std::vector<double> means, widths, ucbs;
    while (trace.rows.size() < cfg.horizon) {
        if (out.locked_arm) {
            const Eigen::VectorXd x = env.pull(*out.locked_arm);
            trace.append(*out.locked_arm, x(x.size() - 1), regret(*out.locked_arm), out.candidates.stage,
                         RoundMode::exploit, out.candidates.arms.size());
            continue;
        }
        const auto& arms = out.candidates.arms;
        means.resize(arms.size());
        widths.resize(arms.size());
        ucbs.resize(arms.size());
        for (std::size_t k = 0; k < arms.size(); ++k) {
            const auto est = model.evaluate(arms[k], ws);
            means[k] = est.mean;
            widths[k] = est.width;
            ucbs[k] = est.mean + est.width;
        }
        if (observer) observer({trace.rows.size() + 1, out.candidates.stage, arms, means, widths});

        const Selection sel = select_arm(out.candidates, widths, ucbs, cfg.m, cfg.horizon);
        if (out.candidates.stage > out.stage_cap) throw std::logic_error("stage exceeded its cap");
        if (sel.lock) out.locked_arm = sel.arm;

        const Eigen::VectorXd x = env.pull(sel.arm);
        trace.append(sel.arm, x(x.size() - 1), regret(sel.arm), out.candidates.stage, sel.mode,
                     out.candidates.arms.size());
        if (!sel.lock) {
            model.observe(sel.arm, x);
            out.min_eigenvalue = std::min(out.min_eigenvalue, model.min_effective_eigenvalue());
        }
    }
    return out;
}

}  // namespace causal_bandit
