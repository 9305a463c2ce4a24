#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causal_bandit.hpp"

namespace cb = causal_bandit;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

std::optional<double> auto_double(const std::string& s, const char* what) {
    if (s == "auto") return std::nullopt;
    try {
        return cb::text::parse_double(s);
    } catch (const cb::ConfigError&) {
        throw cb::ConfigError(std::string(what) + " must be a number or 'auto', got '" + s + "'");
    }
}

std::optional<std::size_t> auto_size(const std::string& s, const char* what) {
    if (s == "auto") return std::nullopt;
    try {
        return static_cast<std::size_t>(cb::text::parse_uint(s));
    } catch (const cb::ConfigError&) {
        throw cb::ConfigError(std::string(what) + " must be a count or 'auto', got '" + s + "'");
    }
}

/// "{}", "", "2" or "{1,3}" with 1-based members.
cb::Arm parse_arm(std::string s, std::size_t node_count) {
    if (!s.empty() && s.front() == '{') s.erase(0, 1);
    if (!s.empty() && s.back() == '}') s.pop_back();
    std::vector<std::size_t> members;
    for (auto tok : cb::text::split(s, ',')) {
        tok = cb::text::trim(tok);
        if (tok.empty()) continue;
        const auto v = cb::text::parse_uint(tok);
        if (v < 1 || v > node_count) throw cb::ConfigError("arm member out of range: " + std::string(tok));
        members.push_back(static_cast<std::size_t>(v - 1));
    }
    return cb::Arm::from_members(members);
}

std::ostream& output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw cb::IoError("cannot write " + path);
    return file;
}

std::string mask_text(cb::NodeMask m) { return cb::Arm(m).to_string(); }

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    std::string instance, name, arm, out;
    std::size_t draws = 10000;
    std::uint64_t seed = 0;
};

void simulate(const SimulateArgs& a) {
    const auto inst = cb::read_instance(a.instance, a.name);
    const auto arm = parse_arm(a.arm, inst.node_count());
    const auto exact = cb::exact_means(inst, arm);
    const auto n = static_cast<Eigen::Index>(inst.node_count());

    std::ofstream file;
    std::ostream* samples = a.out.empty() ? nullptr : &output(a.out, file);
    if (samples) {
        for (Eigen::Index i = 0; i < n; ++i) *samples << (i ? "," : "") << 'x' << i + 1;
        *samples << '\n';
    }
    cb::Rng rng(a.seed);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), sq = sum;
    for (std::size_t k = 0; k < a.draws; ++k) {
        const Eigen::VectorXd x = cb::sample(inst, arm, rng);
        sum += x;
        sq += x.cwiseProduct(x);
        if (samples) {
            for (Eigen::Index i = 0; i < n; ++i) *samples << (i ? "," : "") << cb::text::format_sig(x(i), cb::kCsvDigits);
            *samples << '\n';
        }
    }
    const double r = static_cast<double>(a.draws);
    std::cout << "arm " << arm.to_string() << "\ndraws " << a.draws << "\nseed " << a.seed << '\n';
    std::cout << "node,exact_mean,sample_mean,sample_sd\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = a.draws ? sum(i) / r : std::nan("");
        const double var = a.draws > 1 ? std::max(0.0, (sq(i) - r * mean * mean) / (r - 1.0)) : std::nan("");
        std::cout << i + 1 << ',' << cb::text::format_sig(exact(i), cb::kCsvDigits) << ','
                  << cb::text::format_sig(mean, cb::kCsvDigits) << ',' << cb::text::format_sig(std::sqrt(var), cb::kCsvDigits)
                  << '\n';
    }
}

// ---- learn-structure --------------------------------------------------------

struct LearnArgs {
    std::string instance, name, out;
    double delta = 0.05;
    std::string eta = "auto", t1 = "auto", t2 = "auto", lambda = "auto";
    std::uint64_t seed = 0;
};

void learn_structure(const LearnArgs& a) {
    const auto inst = cb::read_instance(a.instance, a.name);
    const std::size_t n = inst.node_count();
    cb::StructureParams sp;
    sp.delta = a.delta;
    sp.m = cb::value_bound(inst);
    sp.eta = auto_double(a.eta, "--eta").value_or(cb::intervention_margin(inst));
    const auto ec = cb::exploration_constants(sp.m, sp.eta, n, inst.skeleton().max_in_degree(), sp.delta);
    sp.t1 = auto_size(a.t1, "--t1").value_or(ec.t1);
    sp.t2 = auto_size(a.t2, "--t2").value_or(ec.t2);
    sp.lambda = auto_double(a.lambda, "--lambda");

    cb::Environment env(inst, a.seed);
    const auto res = cb::run_structure_learning(env, inst.nu(), sp);
    const auto& sk = res.skeleton;

    std::ofstream file;
    auto& os = output(a.out, file);
    os << "# estimated skeleton, 1-based node indices\n";
    os << "nodes " << n << '\n';
    os << "eta " << cb::text::format_exact(sp.eta) << '\n';
    os << "delta " << cb::text::format_exact(sp.delta) << '\n';
    os << "t1 " << sp.t1 << "\nt2 " << sp.t2 << '\n';
    os << "sweeps " << res.sweeps << "\ntopup_rounds " << res.topup_rounds << "\nrounds_used " << res.rounds_used << '\n';
    for (std::size_t i = 0; i < n; ++i) os << "de_hat " << i + 1 << ' ' << mask_text(sk.de_hat[i]) << '\n';
    for (std::size_t i = 0; i < n; ++i) os << "an_hat " << i + 1 << ' ' << mask_text(sk.an_hat[i]) << '\n';
    for (std::size_t i = 0; i < n; ++i) os << "pa_hat " << i + 1 << ' ' << cb::Arm::from_members(sk.pa_hat[i]).to_string() << '\n';
    os << "order";
    for (auto v : sk.order) os << ' ' << v + 1;
    os << '\n';
    for (std::size_t i = 0; i < n; ++i)
        os << "lasso " << i + 1 << " lambda " << cb::text::format_sig(res.lambdas[i], cb::kCsvDigits) << " kkt "
           << cb::text::format_sig(res.kkt_residuals[i], cb::kCsvDigits) << '\n';

    // The instance file carries the true graph, so recovery can be scored.
    const auto diag = cb::recovery_diagnostics(sk, inst.skeleton());
    os << "order_valid " << (diag.order_valid ? "true" : "false") << '\n';
    os << "parents_contained " << (diag.parents_contained ? "true" : "false") << '\n';
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isnan(diag.kappa[i])) os << "kappa " << i + 1 << ' ' << cb::text::format_sig(diag.kappa[i], 6) << '\n';
}

// ---- run-bandit -------------------------------------------------------------

struct RunArgs {
    std::string instance, name, out;
    std::size_t horizon = 1000;
    std::string alpha = "auto", lambda = "auto", eta = "auto", t1 = "auto", t2 = "auto", mode = "unknown-graph";
    double delta = 0.05;
    bool inflate = false;
    std::uint64_t seed = 0;
};

void run_bandit(const RunArgs& a) {
    const auto inst = cb::read_instance(a.instance, a.name);
    cb::BanditConfig cfg;
    cfg.horizon = a.horizon;
    cfg.mode = cb::parse_graph_mode(a.mode);
    cfg.delta = a.delta;
    cfg.alpha = auto_double(a.alpha, "--alpha");
    cfg.lambda = auto_double(a.lambda, "--lambda");
    cfg.eta = auto_double(a.eta, "--eta");
    cfg.t1 = auto_size(a.t1, "--t1");
    cfg.t2 = auto_size(a.t2, "--t2");
    cfg.inflate_eigen_term = a.inflate;

    const auto res = cb::run_bandit(inst, cfg, a.seed);
    cb::write_csv(fs::path(a.out), res.trace);

    const auto& p = res.params;
    std::cout << "mode " << cb::to_string(cfg.mode) << "\nhorizon " << cfg.horizon << "\nseed " << a.seed << '\n'
              << "alpha " << cb::text::format_sig(p.alpha, cb::kCsvDigits) << "\nm " << cb::text::format_sig(p.m, cb::kCsvDigits)
              << "\neta " << cb::text::format_sig(p.eta, cb::kCsvDigits) << '\n';
    if (res.structure) std::cout << "learning_rounds " << res.structure->rounds_used << '\n';
    std::cout << "final_regret " << cb::text::format_sig(res.trace.final_regret(), cb::kCsvDigits) << '\n'
              << "best_arm " << res.best_arm.to_string() << "\nbest_arm_survived " << (res.best_arm_survived ? "true" : "false")
              << "\ncandidates " << res.design.candidates.arms.size() << "\nstage " << res.design.candidates.stage << '\n';
    if (res.design.locked_arm) std::cout << "locked_arm " << res.design.locked_arm->to_string() << '\n';
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
    std::string config, out_dir;
    std::optional<std::size_t> threads;
};

void bench(const BenchArgs& a) {
    auto cfg = cb::read_config(a.config);
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    if (a.threads) cfg.threads = *a.threads;
    if (cfg.out_dir.empty()) throw cb::ConfigError("bench needs out_dir in the config or --out-dir");
    const fs::path dir(cfg.out_dir);

    if (cfg.sweep_axis.empty()) {
        const auto res = cb::run_experiment(cfg);
        cb::write_experiment(dir, cfg, res);
        cb::write_summary(std::cout, res.report);
        return;
    }
    std::vector<cb::ExperimentResult> results;
    const auto rows = cb::scaling_sweep(cfg.sweep_axis, cfg.sweep_values, cfg, &results);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        auto sub = cfg;
        sub.sweep_axis.clear();
        (cfg.sweep_axis == "L" ? sub.source.layers : sub.source.d) = rows[k].value;
        cb::write_experiment(dir / (cfg.sweep_axis + "_" + std::to_string(rows[k].value)), sub, results[k]);
    }
    std::ofstream out(dir / "sweep.csv");
    if (!out) throw cb::IoError("cannot write " + (dir / "sweep.csv").string());
    cb::write_sweep_csv(out, cfg.sweep_axis, rows);
    cb::write_sweep_csv(std::cout, cfg.sweep_axis, rows);
}

// ---- make-instance ----------------------------------------------------------

struct MakeArgs {
    std::string kind, out, name, noise = "uniform 0 1";
    std::size_t d = 2, layers = 2, horizon = 10000, nodes = 6;
    double w_obs = 1.0, w_int = 0.5, m_b = 1.0;
    bool gaussian = false;
    std::uint64_t seed = 0;
};

void make_instance(const MakeArgs& a) {
    const auto noise = cb::parse_noise(cb::text::split_ws(a.noise));
    cb::InstanceFile file;
    if (a.kind == "hierarchical") {
        file.meta.emplace_back("generator", "hierarchical");
        file.instances.push_back({a.name.empty() ? "hierarchical" : a.name,
                                  cb::hierarchical({a.d, a.layers, a.w_obs, a.w_int, noise})});
    } else if (a.kind == "lower-bound") {
        auto pair = cb::lower_bound_pair(a.d, a.layers, a.horizon, a.m_b, a.gaussian);
        file.meta = {{"generator", "lower-bound"},
                     {"d", std::to_string(a.d)},
                     {"L", std::to_string(a.layers)},
                     {"horizon", std::to_string(a.horizon)},
                     {"gap", cb::text::format_exact(pair.gap)},
                     {"kl", cb::text::format_exact(pair.kl_value)}};
        file.instances.push_back({"base", std::move(pair.base)});
        file.instances.push_back({"swapped", std::move(pair.swapped)});
    } else if (a.kind == "random") {
        cb::RandomDagSpec spec;
        spec.nodes = a.nodes;
        spec.max_parents = a.d;
        spec.seed = a.seed;
        spec.noise = noise;
        file.meta = {{"generator", "random"}, {"seed", std::to_string(a.seed)}};
        file.instances.push_back({a.name.empty() ? "random" : a.name, cb::random_dag(spec)});
    } else {
        throw cb::ConfigError("unknown instance kind '" + a.kind + "'");
    }
    if (a.out.empty() || a.out == "-")
        cb::write_instance_file(std::cout, file);
    else
        cb::write_instance_file(fs::path(a.out), file);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal bandits on linear SEMs with unknown graphs"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Sample an instance under one arm and compare with the exact means");
    s->add_option("--instance", sim.instance, "Instance file")->required();
    s->add_option("--name", sim.name, "Instance name inside the file");
    s->add_option("--arm", sim.arm, "Intervened nodes, e.g. {1,3}");
    s->add_option("--draws", sim.draws, "Number of samples");
    s->add_option("--seed", sim.seed, "RNG seed");
    s->add_option("--out", sim.out, "Write the samples as CSV");

    LearnArgs learn;
    auto* l = app.add_subcommand("learn-structure", "Estimate the graph skeleton by interventions");
    l->add_option("--instance", learn.instance, "Instance file")->required();
    l->add_option("--name", learn.name, "Instance name inside the file");
    l->add_option("--delta", learn.delta, "Failure probability");
    l->add_option("--eta", learn.eta, "Intervention margin or 'auto'");
    l->add_option("--t1", learn.t1, "Probe sweeps or 'auto'");
    l->add_option("--t2", learn.t2, "Observational pulls or 'auto'");
    l->add_option("--lambda", learn.lambda, "Lasso penalty or 'auto'");
    l->add_option("--seed", learn.seed, "RNG seed");
    l->add_option("--out", learn.out, "Output file (stdout when omitted)");

    RunArgs run;
    auto* r = app.add_subcommand("run-bandit", "Run one bandit replication and write its trace");
    r->add_option("--instance", run.instance, "Instance file")->required();
    r->add_option("--name", run.name, "Instance name inside the file");
    r->add_option("--horizon", run.horizon, "Total rounds T");
    r->add_option("--alpha", run.alpha, "Confidence scale or 'auto'");
    r->add_option("--lambda", run.lambda, "Lasso penalty or 'auto'");
    r->add_option("--eta", run.eta, "Intervention margin or 'auto'");
    r->add_option("--mode", run.mode, "unknown-graph | known-graph | graph-dependent");
    r->add_option("--t1", run.t1, "Probe sweeps or 'auto'");
    r->add_option("--t2", run.t2, "Observational pulls or 'auto'");
    r->add_option("--delta", run.delta, "Failure probability");
    r->add_flag("--inflate-eigen-term", run.inflate, "Scale the eigenvalue term of the width by sqrt(2)");
    r->add_option("--seed", run.seed, "RNG seed");
    r->add_option("--out", run.out, "Trace CSV")->required();

    BenchArgs b;
    std::size_t threads = 0;
    auto* bc = app.add_subcommand("bench", "Run a replicated experiment from a config file");
    bc->add_option("--config", b.config, "Config file")->required();
    bc->add_option("--out-dir", b.out_dir, "Overrides out_dir");
    auto* threads_opt = bc->add_option("--threads", threads, "Worker threads (0: all cores)");

    MakeArgs mk;
    auto* m = app.add_subcommand("make-instance", "Write a generated instance file");
    m->add_option("kind", mk.kind, "hierarchical | lower-bound | random")->required();
    m->add_option("--d", mk.d, "Layer width, or max in-degree for random");
    m->add_option("--layers,-L", mk.layers, "Number of layers");
    m->add_option("--w-obs", mk.w_obs, "Observational weight");
    m->add_option("--w-int", mk.w_int, "Interventional weight");
    m->add_option("--noise", mk.noise, "Noise spec, e.g. \"uniform 0 1\"");
    m->add_option("--horizon", mk.horizon, "Horizon the lower-bound gap is tuned to");
    m->add_option("--m-b", mk.m_b, "Weight bound for the lower-bound pair");
    m->add_flag("--gaussian", mk.gaussian, "Untruncated Gaussian noise for the lower-bound pair");
    m->add_option("--nodes", mk.nodes, "Node count for random");
    m->add_option("--seed", mk.seed, "Seed for random");
    m->add_option("--name", mk.name, "Instance name");
    m->add_option("--out", mk.out, "Output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*s) simulate(sim);
        if (*l) learn_structure(learn);
        if (*r) run_bandit(run);
        if (*bc) {
            if (threads_opt->count() > 0) b.threads = threads;
            bench(b);
        }
        if (*m) make_instance(mk);
    } catch (const cb::ReplicationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.config_fault() ? kExitConfig : kExitRuntime;
    } catch (const cb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cb::InvalidInstance& e) {
        std::cerr << "invalid instance: " << e.what() << '\n';
        return kExitConfig;
    } catch (const cb::CycleDetected& e) {
        std::cerr << "invalid instance: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
