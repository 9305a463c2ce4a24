#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "causal_bandit/bandit.hpp"
#include "causal_bandit/errors.hpp"
#include "causal_bandit/gallery.hpp"
#include "causal_bandit/instance_io.hpp"
#include "causal_bandit/text.hpp"
#include "causal_bandit/trace.hpp"

namespace causal_bandit {

inline constexpr const char* kThreadsEnv = "CAUSAL_BANDIT_THREADS";

/// Where the instance comes from: a file, or one of the generators.
struct InstanceSource {
    std::string file;           // instance file; takes precedence when set
    std::string name;           // instance name inside the file (first when empty)
    std::string generator = "hierarchical";  // hierarchical | lower-bound | random
    std::size_t d = 2;
    std::size_t layers = 2;
    double w_obs = 1.0;
    double w_int = 0.5;
    NoiseSpec noise = NoiseSpec::uniform(0.0, 1.0);
    // lower-bound
    std::size_t lb_horizon = 0;  // 0: use the experiment horizon
    double m_b = 1.0;
    bool lb_swapped = false;
    // random
    std::size_t nodes = 6;
    std::uint64_t instance_seed = 0;
};

struct ExperimentConfig {
    InstanceSource source;
    BanditConfig bandit;
    std::size_t replications = 1;
    std::uint64_t seed_base = 0;
    std::string out_dir;  // empty: nothing written
    bool write_traces = false;
    std::size_t threads = 0;  // 0: hardware concurrency
    std::string sweep_axis;   // "", "L" or "d"
    std::vector<std::size_t> sweep_values;
};

namespace detail {

inline std::string opt_text(const std::optional<double>& v) { return v ? text::format_exact(*v) : "auto"; }
inline std::string opt_text(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "auto"; }

inline bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("expected a boolean, got '" + std::string(s) + "'");
}

inline std::optional<double> parse_opt_double(std::string_view s) {
    if (s == "auto") return std::nullopt;
    return text::parse_double(s);
}

inline std::optional<std::size_t> parse_opt_size(std::string_view s) {
    if (s == "auto") return std::nullopt;
    return static_cast<std::size_t>(text::parse_uint(s));
}

}  // namespace detail

/// Applies one `key = value` setting. Unknown keys are rejected.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    using namespace text;
    auto& s = cfg.source;
    auto& b = cfg.bandit;
    const std::string k(key);
    try {
        if (k == "instance") s.file = std::string(value);
        else if (k == "instance_name") s.name = std::string(value);
        else if (k == "generator") {
            if (value != "hierarchical" && value != "lower-bound" && value != "random")
                throw ConfigError("unknown generator '" + std::string(value) + "'");
            s.generator = std::string(value);
        }
        else if (k == "d") s.d = parse_uint(value);
        else if (k == "layers" || k == "L") s.layers = parse_uint(value);
        else if (k == "w_obs") s.w_obs = parse_double(value);
        else if (k == "w_int") s.w_int = parse_double(value);
        else if (k == "noise") s.noise = parse_noise(split_ws(value));
        else if (k == "lb_horizon") s.lb_horizon = parse_uint(value);
        else if (k == "m_b") s.m_b = parse_double(value);
        else if (k == "lb_instance") {
            if (value != "base" && value != "swapped") throw ConfigError("lb_instance is base or swapped");
            s.lb_swapped = value == "swapped";
        }
        else if (k == "nodes") s.nodes = parse_uint(value);
        else if (k == "instance_seed") s.instance_seed = parse_uint(value);
        else if (k == "horizon") b.horizon = parse_uint(value);
        else if (k == "mode") b.mode = parse_graph_mode(value);
        else if (k == "delta") b.delta = parse_double(value);
        else if (k == "alpha") b.alpha = detail::parse_opt_double(value);
        else if (k == "lambda") b.lambda = detail::parse_opt_double(value);
        else if (k == "eta") b.eta = detail::parse_opt_double(value);
        else if (k == "m") b.m = detail::parse_opt_double(value);
        else if (k == "t1") b.t1 = detail::parse_opt_size(value);
        else if (k == "t2") b.t2 = detail::parse_opt_size(value);
        else if (k == "c") b.c = parse_double(value);
        else if (k == "inflate_eigen_term") b.inflate_eigen_term = detail::parse_bool(value);
        else if (k == "replications") cfg.replications = parse_uint(value);
        else if (k == "seed_base") cfg.seed_base = parse_uint(value);
        else if (k == "out_dir") cfg.out_dir = std::string(value);
        else if (k == "write_traces") cfg.write_traces = detail::parse_bool(value);
        else if (k == "threads") cfg.threads = parse_uint(value);
        else if (k == "sweep_axis") {
            if (value != "" && value != "L" && value != "d") throw ConfigError("sweep_axis is L or d");
            cfg.sweep_axis = std::string(value);
        }
        else if (k == "sweep_values") {
            cfg.sweep_values.clear();
            for (auto v : split(value, ',')) cfg.sweep_values.push_back(parse_uint(trim(v)));
        }
        else throw ConfigError("unknown key");
    } catch (const ConfigError& e) {
        throw ConfigError("config key '" + k + "': " + e.what());
    }
}

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
    if (cfg.bandit.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (!cfg.sweep_axis.empty()) {
        if (cfg.sweep_values.empty()) throw ConfigError("sweep_values must be nonempty");
        if (!std::is_sorted(cfg.sweep_values.begin(), cfg.sweep_values.end()))
            throw ConfigError("sweep_values must be ascending");
    }
}

/// Flat `key = value` lines; `#` starts a comment.
inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        const auto t = text::trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, text::trim(t.substr(0, eq)), text::trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate(cfg);
    return cfg;
}

inline ExperimentConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    return parse_config(in);
}

inline std::string format_config(const ExperimentConfig& cfg) {
    const auto& s = cfg.source;
    const auto& b = cfg.bandit;
    std::ostringstream os;
    if (!s.file.empty()) {
        os << "instance = " << s.file << "\n";
        if (!s.name.empty()) os << "instance_name = " << s.name << "\n";
    } else {
        os << "generator = " << s.generator << "\n";
        if (s.generator == "random") {
            os << "nodes = " << s.nodes << "\nd = " << s.d << "\ninstance_seed = " << s.instance_seed << "\n";
        } else {
            os << "d = " << s.d << "\nlayers = " << s.layers << "\n";
        }
        if (s.generator == "hierarchical")
            os << "w_obs = " << text::format_exact(s.w_obs) << "\nw_int = " << text::format_exact(s.w_int) << "\n";
        if (s.generator == "lower-bound")
            os << "lb_horizon = " << s.lb_horizon << "\nm_b = " << text::format_exact(s.m_b)
               << "\nlb_instance = " << (s.lb_swapped ? "swapped" : "base") << "\n";
        else
            os << "noise = " << format_noise(s.noise) << "\n";
    }
    os << "horizon = " << b.horizon << "\nmode = " << to_string(b.mode) << "\ndelta = " << text::format_exact(b.delta)
       << "\nalpha = " << detail::opt_text(b.alpha) << "\nlambda = " << detail::opt_text(b.lambda)
       << "\neta = " << detail::opt_text(b.eta) << "\nm = " << detail::opt_text(b.m) << "\nt1 = " << detail::opt_text(b.t1)
       << "\nt2 = " << detail::opt_text(b.t2) << "\nc = " << text::format_exact(b.c)
       << "\ninflate_eigen_term = " << (b.inflate_eigen_term ? "true" : "false") << "\nreplications = " << cfg.replications
       << "\nseed_base = " << cfg.seed_base << "\n";
    if (!cfg.sweep_axis.empty()) {
        os << "sweep_axis = " << cfg.sweep_axis << "\nsweep_values = ";
        for (std::size_t k = 0; k < cfg.sweep_values.size(); ++k) os << (k ? "," : "") << cfg.sweep_values[k];
        os << "\n";
    }
    return os.str();
}

inline SemInstance build_instance(const InstanceSource& s, std::size_t horizon) {
    if (!s.file.empty()) return read_instance(s.file, s.name);
    if (s.generator == "hierarchical") return hierarchical({s.d, s.layers, s.w_obs, s.w_int, s.noise});
    if (s.generator == "lower-bound") {
        auto pair = lower_bound_pair(s.d, s.layers, s.lb_horizon ? s.lb_horizon : horizon, s.m_b);
        return s.lb_swapped ? pair.swapped : pair.base;
    }
    if (s.generator == "random") {
        RandomDagSpec r;
        r.nodes = s.nodes;
        r.max_parents = s.d;
        r.seed = s.instance_seed;
        r.noise = s.noise;
        return random_dag(r);
    }
    throw ConfigError("unknown generator '" + s.generator + "'");
}

/// A replication failed; carries its index and whether the cause was a
/// configuration problem.
class ReplicationError : public Error {
public:
    ReplicationError(std::size_t replication, std::uint64_t seed, bool config_fault, const std::string& what)
        : Error("replication " + std::to_string(replication) + " (seed " + std::to_string(seed) + "): " + what),
          replication_(replication), config_fault_(config_fault) {}
    std::size_t replication() const noexcept { return replication_; }
    bool config_fault() const noexcept { return config_fault_; }

private:
    std::size_t replication_;
    bool config_fault_;
};

struct ReplicationSummary {
    std::uint64_t seed = 0;
    double final_regret = 0.0;
    std::size_t learning_rounds = 0;
    std::optional<bool> order_valid;        // learning modes only
    std::optional<bool> parents_contained;  // learning modes only
    bool best_arm_survived = false;
    double min_eigenvalue = 0.0;
    double alpha = 0.0;
    double wall_seconds = 0.0;
};

struct AggregateReport {
    std::size_t replications = 0;
    std::size_t horizon = 0;
    std::vector<double> mean_cum_regret;    // per round
    std::vector<double> stderr_cum_regret;  // sd / sqrt(R)
    double final_mean = 0.0;
    double final_stderr = 0.0;
    double final_min = 0.0;
    double final_max = 0.0;
    double order_valid_rate = std::numeric_limits<double>::quiet_NaN();
    double parents_contained_rate = std::numeric_limits<double>::quiet_NaN();
    double best_arm_survival_rate = 0.0;
    double wall_mean_seconds = 0.0;
    double wall_max_seconds = 0.0;
    ResolvedParams params;  // of replication 0; alpha may differ when it depends on the learned graph
    std::vector<ReplicationSummary> runs;
};

struct ExperimentResult {
    AggregateReport report;
    std::vector<RegretTrace> traces;
};

/// Effective worker count: the environment variable wins, then the config.
inline std::size_t resolve_threads(std::size_t configured) {
    if (const char* env = std::getenv(kThreadsEnv); env && *env) {
        try {
            const auto v = static_cast<std::size_t>(text::parse_uint(env));
            if (v > 0) return v;
        } catch (const ConfigError&) {
            throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
        }
    }
    if (configured > 0) return configured;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs `body(k)` for k in [0, count) on a small pool. The first exception
/// (by index) is rethrown after all workers finish.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < count;) {
            try {
                body(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline AggregateReport aggregate(const std::vector<RegretTrace>& traces, std::size_t horizon) {
    AggregateReport rep;
    rep.replications = traces.size();
    rep.horizon = horizon;
    rep.mean_cum_regret.assign(horizon, 0.0);
    rep.stderr_cum_regret.assign(horizon, 0.0);
    const double r = static_cast<double>(traces.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        double sum = 0.0;
        for (const auto& tr : traces) sum += tr.rows.at(t).cum_regret;
        const double mean = sum / r;
        double ss = 0.0;
        for (const auto& tr : traces) ss += (tr.rows[t].cum_regret - mean) * (tr.rows[t].cum_regret - mean);
        rep.mean_cum_regret[t] = mean;
        rep.stderr_cum_regret[t] = traces.size() > 1 ? std::sqrt(ss / (r - 1.0)) / std::sqrt(r) : 0.0;
    }
    if (horizon > 0) {
        rep.final_mean = rep.mean_cum_regret.back();
        rep.final_stderr = rep.stderr_cum_regret.back();
        rep.final_min = std::numeric_limits<double>::infinity();
        rep.final_max = -std::numeric_limits<double>::infinity();
        for (const auto& tr : traces) {
            rep.final_min = std::min(rep.final_min, tr.final_regret());
            rep.final_max = std::max(rep.final_max, tr.final_regret());
        }
    }
    return rep;
}

/// Seeded replications of one configuration. Replication r uses seed
/// seed_base + r and is reproducible on its own; results are reduced in
/// replication order, so thread count does not affect them.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<SemInstance>& given = {}) {
    validate(cfg);
    const SemInstance inst = given ? *given : build_instance(cfg.source, cfg.bandit.horizon);
    const std::size_t reps = cfg.replications;

    std::vector<RegretTrace> traces(reps);
    std::vector<ReplicationSummary> runs(reps);
    std::vector<ResolvedParams> params(reps);
    parallel_for(reps, resolve_threads(cfg.threads), [&](std::size_t r) {
        const std::uint64_t seed = cfg.seed_base + r;
        const auto start = std::chrono::steady_clock::now();
        try {
            BanditResult br = run_bandit(inst, cfg.bandit, seed);
            auto& s = runs[r];
            s.seed = seed;
            s.final_regret = br.trace.final_regret();
            s.best_arm_survived = br.best_arm_survived;
            s.min_eigenvalue = br.design.min_eigenvalue;
            s.alpha = br.params.alpha;
            if (br.structure) {
                s.learning_rounds = br.structure->rounds_used;
                const auto diag = recovery_diagnostics(br.skeleton, inst.skeleton());
                s.order_valid = diag.order_valid;
                s.parents_contained = diag.parents_contained;
            }
            params[r] = br.params;
            traces[r] = std::move(br.trace);
        } catch (const ConfigError& e) {
            throw ReplicationError(r, seed, true, e.what());
        } catch (const std::exception& e) {
            throw ReplicationError(r, seed, false, e.what());
        }
        runs[r].wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    ExperimentResult out;
    out.report = aggregate(traces, cfg.bandit.horizon);
    auto& rep = out.report;
    rep.params = params.front();
    std::size_t learned = 0, valid = 0, contained = 0, survived = 0;
    for (const auto& s : runs) {
        if (s.order_valid) {
            ++learned;
            valid += *s.order_valid ? 1 : 0;
            contained += *s.parents_contained ? 1 : 0;
        }
        survived += s.best_arm_survived ? 1 : 0;
        rep.wall_mean_seconds += s.wall_seconds / static_cast<double>(reps);
        rep.wall_max_seconds = std::max(rep.wall_max_seconds, s.wall_seconds);
    }
    if (learned > 0) {
        rep.order_valid_rate = static_cast<double>(valid) / static_cast<double>(learned);
        rep.parents_contained_rate = static_cast<double>(contained) / static_cast<double>(learned);
    }
    rep.best_arm_survival_rate = static_cast<double>(survived) / static_cast<double>(reps);
    rep.runs = std::move(runs);
    out.traces = std::move(traces);
    return out;
}

/// Per-round aggregate: round, mean_cum_regret, stderr_cum_regret.
inline void write_report_csv(std::ostream& os, const AggregateReport& rep) {
    os << "round,mean_cum_regret,stderr_cum_regret\n";
    for (std::size_t t = 0; t < rep.mean_cum_regret.size(); ++t)
        os << (t + 1) << ',' << text::format_sig(rep.mean_cum_regret[t], kCsvDigits) << ','
           << text::format_sig(rep.stderr_cum_regret[t], kCsvDigits) << '\n';
}

inline void write_report_csv(const std::filesystem::path& path, const AggregateReport& rep) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_report_csv(out, rep);
    if (!out) throw IoError("write failed for " + path.string());
}

/// Reads the per-round columns back; the summary fields are recomputed from them.
inline AggregateReport read_report_csv(std::istream& in) {
    AggregateReport rep;
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "round,mean_cum_regret,stderr_cum_regret")
        throw IoError("report CSV: unexpected header");
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        const auto f = text::split(text::trim(line), ',');
        if (f.size() != 3) throw IoError("report CSV: expected 3 fields");
        if (text::parse_uint(f[0]) != rep.mean_cum_regret.size() + 1) throw IoError("report CSV: rounds not contiguous");
        rep.mean_cum_regret.push_back(text::parse_double(f[1]));
        rep.stderr_cum_regret.push_back(text::parse_double(f[2]));
    }
    rep.horizon = rep.mean_cum_regret.size();
    if (rep.horizon) {
        rep.final_mean = rep.mean_cum_regret.back();
        rep.final_stderr = rep.stderr_cum_regret.back();
    }
    return rep;
}

inline AggregateReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return read_report_csv(in);
}

/// Deterministic replication table: one row per seed.
inline void write_replications_csv(std::ostream& os, const AggregateReport& rep) {
    os << "replication,seed,final_regret,learning_rounds,order_valid,parents_contained,best_arm_survived,min_eigenvalue,alpha\n";
    auto flag = [](const std::optional<bool>& b) { return b ? (*b ? "1" : "0") : ""; };
    for (std::size_t r = 0; r < rep.runs.size(); ++r) {
        const auto& s = rep.runs[r];
        os << r << ',' << s.seed << ',' << text::format_sig(s.final_regret, kCsvDigits) << ',' << s.learning_rounds << ','
           << flag(s.order_valid) << ',' << flag(s.parents_contained) << ',' << (s.best_arm_survived ? 1 : 0) << ','
           << text::format_sig(s.min_eigenvalue, kCsvDigits) << ',' << text::format_sig(s.alpha, kCsvDigits) << '\n';
    }
}

/// Key/value summary including resolved parameters and wall-clock numbers.
inline void write_summary(std::ostream& os, const AggregateReport& rep) {
    auto num = [](double v) { return text::format_sig(v, kCsvDigits); };
    os << "replications = " << rep.replications << "\nhorizon = " << rep.horizon << "\nfinal_mean = " << num(rep.final_mean)
       << "\nfinal_stderr = " << num(rep.final_stderr) << "\nfinal_min = " << num(rep.final_min)
       << "\nfinal_max = " << num(rep.final_max) << "\norder_valid_rate = " << num(rep.order_valid_rate)
       << "\nparents_contained_rate = " << num(rep.parents_contained_rate)
       << "\nbest_arm_survival_rate = " << num(rep.best_arm_survival_rate) << "\nresolved.delta = " << num(rep.params.delta)
       << "\nresolved.eta = " << num(rep.params.eta) << "\nresolved.m = " << num(rep.params.m)
       << "\nresolved.alpha = " << num(rep.params.alpha) << "\nresolved.t1 = " << rep.params.t1
       << "\nresolved.t2 = " << rep.params.t2
       << "\nresolved.lambda = " << (rep.params.lambda ? num(*rep.params.lambda) : std::string("auto"))
       << "\nwall_mean_seconds = " << num(rep.wall_mean_seconds) << "\nwall_max_seconds = " << num(rep.wall_max_seconds)
       << "\n";
}

/// Writes report.csv, replications.csv, summary.txt, config.txt and
/// optionally one trace per replication. Everything but the wall-clock lines
/// of summary.txt is deterministic.
inline void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& res) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_report_csv(dir / "report.csv", res.report);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw IoError("cannot write " + (dir / name).string());
        return out;
    };
    {
        auto out = open("replications.csv");
        write_replications_csv(out, res.report);
    }
    {
        auto out = open("summary.txt");
        write_summary(out, res.report);
    }
    {
        auto out = open("config.txt");
        out << format_config(cfg);
    }
    if (cfg.write_traces)
        for (std::size_t r = 0; r < res.traces.size(); ++r) {
            std::ostringstream name;
            name << "trace_" << std::setw(4) << std::setfill('0') << r << ".csv";
            write_csv(dir / name.str(), res.traces[r]);
        }
}

struct SweepRow {
    std::size_t value = 0;
    double final_mean = 0.0;
    double final_stderr = 0.0;
};

/// One experiment per axis value on the hierarchical generator: d = 2 held
/// fixed when sweeping L, L = 2 when sweeping d.
inline std::vector<SweepRow> scaling_sweep(const std::string& axis, const std::vector<std::size_t>& values,
                                           const ExperimentConfig& base,
                                           std::vector<ExperimentResult>* results = nullptr) {
    if (axis != "L" && axis != "d") throw ConfigError("sweep axis must be L or d");
    if (values.empty()) throw ConfigError("sweep values must be nonempty");
    if (!std::is_sorted(values.begin(), values.end())) throw ConfigError("sweep values must be ascending");
    std::vector<SweepRow> rows;
    for (auto v : values) {
        ExperimentConfig cfg = base;
        cfg.source.file.clear();
        cfg.source.generator = "hierarchical";
        cfg.sweep_axis.clear();
        if (axis == "L") {
            cfg.source.d = 2;
            cfg.source.layers = v;
        } else {
            cfg.source.d = v;
            cfg.source.layers = 2;
        }
        auto res = run_experiment(cfg);
        rows.push_back({v, res.report.final_mean, res.report.final_stderr});
        if (results) results->push_back(std::move(res));
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::string& axis, const std::vector<SweepRow>& rows) {
    os << axis << ",final_mean_regret,final_stderr\n";
    for (const auto& r : rows)
        os << r.value << ',' << text::format_sig(r.final_mean, kCsvDigits) << ','
           << text::format_sig(r.final_stderr, kCsvDigits) << '\n';
}

}  // namespace causal_bandit
