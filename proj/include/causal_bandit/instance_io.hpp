#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "causal_bandit/errors.hpp"
#include "causal_bandit/sem.hpp"
#include "causal_bandit/text.hpp"

namespace causal_bandit {

// Line-oriented instance format, 1-based node indices, '#' comments:
//
//   meta <key> <value>                        (file level, optional)
//   instance <name>
//   nodes <N>
//   m_b <x>
//   m_eps <x>
//   max_in_degree <d>                         (checked against the edges)
//   depth <L>                                 (checked against the edges)
//   edge <from> <to> <b_obs> <b_int>
//   noise <node> uniform <lo> <hi>
//   noise <node> truncated_gaussian <mean> <sd> <bound>
//   noise <node> gaussian <mean> <sd>
//   noise <node> constant <c>
//   nu <node> <value>
//   end
//
// Numbers are written in shortest round-trip form, so write-then-read
// reproduces every double exactly.

struct NamedInstance {
    std::string name;
    SemInstance instance;
};

struct InstanceFile {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<NamedInstance> instances;

    std::optional<std::string> meta_value(const std::string& key) const {
        for (const auto& [k, v] : meta)
            if (k == key) return v;
        return std::nullopt;
    }
};

inline std::string format_noise(const NoiseSpec& spec) {
    using text::format_exact;
    return std::visit(
        [](const auto& f) -> std::string {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, UniformNoise>)
                return "uniform " + format_exact(f.lo) + " " + format_exact(f.hi);
            else if constexpr (std::is_same_v<T, TruncatedGaussianNoise>)
                return "truncated_gaussian " + format_exact(f.mean) + " " + format_exact(f.sd) + " " +
                       format_exact(f.bound);
            else if constexpr (std::is_same_v<T, GaussianNoise>)
                return "gaussian " + format_exact(f.mean) + " " + format_exact(f.sd);
            else
                return "constant " + format_exact(f.value);
        },
        spec.family());
}

/// Parses "uniform lo hi", "truncated_gaussian mean sd bound", "gaussian mean sd"
/// or "constant c" from pre-split tokens.
inline NoiseSpec parse_noise(const std::vector<std::string_view>& tok) {
    if (tok.empty()) throw ConfigError("empty noise spec");
    auto need = [&](std::size_t n) {
        if (tok.size() != n + 1) throw ConfigError("noise '" + std::string(tok[0]) + "' expects " + std::to_string(n) + " values");
    };
    using text::parse_double;
    if (tok[0] == "uniform") {
        need(2);
        return NoiseSpec::uniform(parse_double(tok[1]), parse_double(tok[2]));
    }
    if (tok[0] == "truncated_gaussian") {
        need(3);
        return NoiseSpec::truncated_gaussian(parse_double(tok[1]), parse_double(tok[2]), parse_double(tok[3]));
    }
    if (tok[0] == "gaussian") {
        need(2);
        return NoiseSpec::gaussian(parse_double(tok[1]), parse_double(tok[2]));
    }
    if (tok[0] == "constant") {
        need(1);
        return NoiseSpec::constant(parse_double(tok[1]));
    }
    throw ConfigError("unknown noise family '" + std::string(tok[0]) + "'");
}

inline void write_instance_block(std::ostream& os, const SemInstance& inst, const std::string& name) {
    using text::format_exact;
    const auto& g = inst.skeleton();
    os << "instance " << (name.empty() ? "unnamed" : name) << '\n';
    os << "nodes " << inst.node_count() << '\n';
    os << "m_b " << format_exact(inst.m_b()) << '\n';
    os << "m_eps " << format_exact(inst.m_eps()) << '\n';
    os << "max_in_degree " << g.max_in_degree() << '\n';
    os << "depth " << g.max_depth() << '\n';
    for (const auto& e : g.edges()) {
        const auto j = static_cast<Eigen::Index>(e.from);
        const auto i = static_cast<Eigen::Index>(e.to);
        os << "edge " << e.from + 1 << ' ' << e.to + 1 << ' ' << format_exact(inst.b_obs()(j, i)) << ' '
           << format_exact(inst.b_int()(j, i)) << '\n';
    }
    for (std::size_t i = 0; i < inst.node_count(); ++i) os << "noise " << i + 1 << ' ' << format_noise(inst.noise()[i]) << '\n';
    for (std::size_t i = 0; i < inst.node_count(); ++i)
        os << "nu " << i + 1 << ' ' << format_exact(inst.nu()(static_cast<Eigen::Index>(i))) << '\n';
    os << "end\n";
}

inline void write_instance_file(std::ostream& os, const InstanceFile& file) {
    os << "# linear SEM instance file\n";
    for (const auto& [k, v] : file.meta) os << "meta " << k << ' ' << v << '\n';
    for (const auto& ni : file.instances) write_instance_block(os, ni.instance, ni.name);
}

inline std::string format_instance(const SemInstance& inst, const std::string& name = "") {
    std::ostringstream os;
    write_instance_file(os, InstanceFile{{}, {{name, inst}}});
    return os.str();
}

namespace detail {

struct InstanceBuilder {
    std::string name;
    std::optional<std::size_t> nodes;
    double m_b = 1.0;
    double m_eps = 1.0;
    std::optional<std::size_t> max_in_degree;
    std::optional<std::size_t> depth;
    std::vector<std::tuple<std::size_t, std::size_t, double, double>> edges;
    std::vector<std::optional<NoiseSpec>> noise;
    std::vector<std::optional<double>> nu;

    std::size_t node_index(std::string_view tok) const {
        const auto v = text::parse_uint(tok);
        if (!nodes || v < 1 || v > *nodes) throw ConfigError("node index out of range: " + std::string(tok));
        return static_cast<std::size_t>(v - 1);
    }

    SemInstance build() const {
        if (!nodes) throw ConfigError("instance '" + name + "' lacks a nodes line");
        const std::size_t n = *nodes;
        std::vector<Edge> e;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::MatrixXd bs = b;
        for (const auto& [from, to, wo, wi] : edges) {
            e.push_back({from, to});
            b(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = wo;
            bs(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = wi;
        }
        std::vector<NoiseSpec> ns;
        Eigen::VectorXd mu(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            if (!noise[i]) throw ConfigError("instance '" + name + "' lacks noise for node " + std::to_string(i + 1));
            ns.push_back(*noise[i]);
            mu(static_cast<Eigen::Index>(i)) = nu[i] ? *nu[i] : noise[i]->mean();
        }
        SemInstance inst(DagSkeleton(n, std::move(e)), std::move(b), std::move(bs), std::move(ns), std::move(mu), m_b, m_eps);
        if (max_in_degree && *max_in_degree != inst.skeleton().max_in_degree())
            throw InvalidInstance("declared max_in_degree does not match the edges");
        if (depth && *depth != inst.skeleton().max_depth())
            throw InvalidInstance("declared depth does not match the edges");
        return inst;
    }
};

}  // namespace detail

inline InstanceFile parse_instance_file(std::istream& in) {
    InstanceFile file;
    std::optional<detail::InstanceBuilder> cur;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = std::string_view(line);
        if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        const auto tok = text::split_ws(body);
        if (tok.empty()) continue;
        try {
            const auto key = tok[0];
            if (key == "meta") {
                if (tok.size() < 3) throw ConfigError("meta needs a key and a value");
                std::string value(tok[2]);
                for (std::size_t k = 3; k < tok.size(); ++k) value += " " + std::string(tok[k]);
                file.meta.emplace_back(std::string(tok[1]), value);
            } else if (key == "instance") {
                if (cur) throw ConfigError("nested instance block");
                cur.emplace();
                cur->name = tok.size() > 1 ? std::string(tok[1]) : "";
            } else if (!cur) {
                throw ConfigError("'" + std::string(key) + "' outside an instance block");
            } else if (key == "end") {
                file.instances.push_back({cur->name, cur->build()});
                cur.reset();
            } else if (key == "nodes") {
                cur->nodes = static_cast<std::size_t>(text::parse_uint(tok.at(1)));
                cur->noise.assign(*cur->nodes, std::nullopt);
                cur->nu.assign(*cur->nodes, std::nullopt);
            } else if (key == "m_b") {
                cur->m_b = text::parse_double(tok.at(1));
            } else if (key == "m_eps") {
                cur->m_eps = text::parse_double(tok.at(1));
            } else if (key == "max_in_degree") {
                cur->max_in_degree = static_cast<std::size_t>(text::parse_uint(tok.at(1)));
            } else if (key == "depth") {
                cur->depth = static_cast<std::size_t>(text::parse_uint(tok.at(1)));
            } else if (key == "edge") {
                if (tok.size() != 5) throw ConfigError("edge expects: from to b_obs b_int");
                cur->edges.emplace_back(cur->node_index(tok[1]), cur->node_index(tok[2]), text::parse_double(tok[3]),
                                        text::parse_double(tok[4]));
            } else if (key == "noise") {
                if (tok.size() < 3) throw ConfigError("noise expects: node family params...");
                const auto i = cur->node_index(tok[1]);
                cur->noise[i] = parse_noise(std::vector<std::string_view>(tok.begin() + 2, tok.end()));
            } else if (key == "nu") {
                if (tok.size() != 3) throw ConfigError("nu expects: node value");
                cur->nu[cur->node_index(tok[1])] = text::parse_double(tok[2]);
            } else {
                throw ConfigError("unknown key '" + std::string(key) + "'");
            }
        } catch (const std::out_of_range&) {
            throw ConfigError("line " + std::to_string(lineno) + ": missing value");
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (cur) throw ConfigError("unterminated instance block '" + cur->name + "'");
    if (file.instances.empty()) throw ConfigError("no instance block found");
    return file;
}

inline InstanceFile read_instance_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return parse_instance_file(in);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

/// The named instance, or the first one when `name` is empty.
inline SemInstance read_instance(const std::filesystem::path& path, const std::string& name = "") {
    auto file = read_instance_file(path);
    if (name.empty()) return std::move(file.instances.front().instance);
    for (auto& ni : file.instances)
        if (ni.name == name) return std::move(ni.instance);
    throw ConfigError(path.string() + ": no instance named '" + name + "'");
}

inline void write_instance_file(const std::filesystem::path& path, const InstanceFile& file) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    write_instance_file(out, file);
    if (!out) throw IoError("write failed for " + path.string());
}

inline void write_instance(const std::filesystem::path& path, const SemInstance& inst, const std::string& name = "") {
    write_instance_file(path, InstanceFile{{}, {{name, inst}}});
}

}  // namespace causal_bandit
