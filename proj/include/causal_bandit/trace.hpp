#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/sem.hpp"
#include "causal_bandit/text.hpp"

namespace causal_bandit {

enum class RoundMode { learn, explore, eliminate, exploit };

inline const char* to_string(RoundMode m) {
    switch (m) {
        case RoundMode::learn: return "learn";
        case RoundMode::explore: return "explore";
        case RoundMode::eliminate: return "eliminate";
        case RoundMode::exploit: return "exploit";
    }
    return "?";
}

inline RoundMode parse_round_mode(std::string_view s) {
    if (s == "learn") return RoundMode::learn;
    if (s == "explore") return RoundMode::explore;
    if (s == "eliminate") return RoundMode::eliminate;
    if (s == "exploit") return RoundMode::exploit;
    throw ConfigError("unknown round mode '" + std::string(s) + "'");
}

struct TraceRow {
    std::size_t round = 0;
    Arm arm;
    double reward = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    std::size_t stage = 0;  // 0 while structure learning runs
    RoundMode mode = RoundMode::explore;
    std::size_t candidate_count = 0;
};

/// Per-round record of one bandit run. Without ground truth the regret
/// columns are not tracked.
struct RegretTrace {
    std::vector<TraceRow> rows;
    bool has_regret = true;

    void append(Arm arm, double reward, std::optional<double> inst_regret, std::size_t stage, RoundMode mode,
                std::size_t candidates) {
        TraceRow r;
        r.round = rows.size() + 1;
        r.arm = arm;
        r.reward = reward;
        if (inst_regret) {
            r.inst_regret = *inst_regret;
            r.cum_regret = (rows.empty() ? 0.0 : rows.back().cum_regret) + *inst_regret;
        } else {
            has_regret = false;
        }
        r.stage = stage;
        r.mode = mode;
        r.candidate_count = candidates;
        rows.push_back(r);
    }

    double final_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
    double regret_at(std::size_t round) const { return round == 0 ? 0.0 : rows.at(round - 1).cum_regret; }
};

/// Exact reward means per arm, cached, against the best attainable value.
class RegretOracle {
public:
    explicit RegretOracle(const SemInstance& truth) : truth_(&truth) {
        const auto arms = truth.node_count() <= kMaxEnumerableNodes ? enumerate_all_arms(truth.node_count())
                                                                    : reward_relevant_arms(truth);
        const auto best = best_arm_brute_force(truth, arms);
        best_arm_ = best.arm;
        best_value_ = best.value;
    }

    Arm best_arm() const noexcept { return best_arm_; }
    double best_value() const noexcept { return best_value_; }

    double mean(Arm a) {
        auto it = cache_.find(a.mask());
        if (it != cache_.end()) return it->second;
        const double v = exact_mean(*truth_, a, truth_->reward_node());
        cache_.emplace(a.mask(), v);
        return v;
    }

    double regret(Arm a) { return best_value_ - mean(a); }

    /// Largest gap over the given arms.
    double max_gap(const std::vector<Arm>& arms) {
        double g = 0.0;
        for (auto a : arms) g = std::max(g, regret(a));
        return g;
    }

private:
    const SemInstance* truth_;
    Arm best_arm_;
    double best_value_ = 0.0;
    std::unordered_map<NodeMask, double> cache_;
};

// CSV: header row, then one row per round; reals with 12 significant digits.
inline constexpr int kCsvDigits = 12;

inline void write_csv(std::ostream& os, const RegretTrace& trace) {
    os << "round,arm_bitmask,reward";
    if (trace.has_regret) os << ",inst_regret,cum_regret";
    os << ",stage,mode,candidate_count\n";
    for (const auto& r : trace.rows) {
        os << r.round << ',' << r.arm.mask() << ',' << text::format_sig(r.reward, kCsvDigits);
        if (trace.has_regret)
            os << ',' << text::format_sig(r.inst_regret, kCsvDigits) << ',' << text::format_sig(r.cum_regret, kCsvDigits);
        os << ',' << r.stage << ',' << to_string(r.mode) << ',' << r.candidate_count << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const RegretTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, trace);
    if (!out) throw IoError("write failed for " + path.string());
}

inline RegretTrace read_trace_csv(std::istream& in) {
    RegretTrace t;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace file");
    const auto header = text::split(text::trim(line), ',');
    t.has_regret = header.size() == 8;
    if (header.size() != 8 && header.size() != 6) throw IoError("unexpected trace header");
    while (std::getline(in, line)) {
        const auto body = text::trim(line);
        if (body.empty()) continue;
        const auto f = text::split(body, ',');
        if (f.size() != header.size()) throw IoError("malformed trace row: " + std::string(body));
        TraceRow r;
        std::size_t k = 0;
        r.round = static_cast<std::size_t>(text::parse_uint(f[k++]));
        r.arm = Arm(static_cast<NodeMask>(text::parse_uint(f[k++])));
        r.reward = text::parse_double(f[k++]);
        if (t.has_regret) {
            r.inst_regret = text::parse_double(f[k++]);
            r.cum_regret = text::parse_double(f[k++]);
        }
        r.stage = static_cast<std::size_t>(text::parse_uint(f[k++]));
        r.mode = parse_round_mode(f[k++]);
        r.candidate_count = static_cast<std::size_t>(text::parse_uint(f[k++]));
        t.rows.push_back(r);
    }
    return t;
}

inline RegretTrace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_trace_csv(in);
}

}  // namespace causal_bandit
