#pragma once

#include <algorithm>
#include <cstddef>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "causal_bandit/arm.hpp"
#include "causal_bandit/errors.hpp"

namespace causal_bandit {

struct Edge {
    std::size_t from;
    std::size_t to;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Kahn's algorithm over parent lists, smallest ready index first.
/// Throws CycleDetected with one concrete cycle when no order exists.
inline std::vector<std::size_t> topological_order(const std::vector<std::vector<std::size_t>>& parents) {
    const std::size_t n = parents.size();
    std::vector<std::vector<std::size_t>> children(n);
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto p : parents[i]) {
            children[p].push_back(i);
            ++indegree[i];
        }
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);

    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        const auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (auto c : children[v])
            if (--indegree[c] == 0) ready.push(c);
    }
    if (order.size() == n) return order;

    // Every leftover node has a leftover parent; walk parents until a repeat.
    std::vector<int> seen_at(n, -1);
    std::size_t v = 0;
    while (indegree[v] == 0) ++v;
    std::vector<std::size_t> walk;
    while (seen_at[v] < 0) {
        seen_at[v] = static_cast<int>(walk.size());
        walk.push_back(v);
        for (auto p : parents[v]) {
            if (indegree[p] != 0) {
                v = p;
                break;
            }
        }
    }
    std::vector<std::size_t> cycle(walk.begin() + seen_at[v], walk.end());
    std::reverse(cycle.begin(), cycle.end());
    throw CycleDetected(std::move(cycle));
}

/// Directed acyclic graph on nodes 0..N-1; node N-1 is the reward node.
/// Depths, in-degree and reachability masks are cached at construction.
class DagSkeleton {
public:
    DagSkeleton() = default;

    DagSkeleton(std::size_t node_count, std::vector<Edge> edges) : node_count_(node_count) {
        if (node_count == 0) throw InvalidInstance("graph needs at least one node");
        if (node_count > kMaxNodes) throw InvalidInstance("graph exceeds 64 nodes");
        std::sort(edges.begin(), edges.end());
        if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
            throw InvalidInstance("duplicate edge");
        parents_.assign(node_count, {});
        children_.assign(node_count, {});
        for (const auto& e : edges) {
            if (e.from >= node_count || e.to >= node_count) throw InvalidInstance("edge endpoint out of range");
            if (e.from == e.to) throw CycleDetected({e.from});
            parents_[e.to].push_back(e.from);
            children_[e.from].push_back(e.to);
        }
        edges_ = std::move(edges);
        order_ = topological_order(parents_);

        depth_.assign(node_count, 0);
        ancestors_.assign(node_count, 0);
        for (auto v : order_) {
            for (auto p : parents_[v]) {
                depth_[v] = std::max(depth_[v], depth_[p] + 1);
                ancestors_[v] |= ancestors_[p] | node_bit(p);
            }
            max_in_degree_ = std::max(max_in_degree_, parents_[v].size());
            max_depth_ = std::max(max_depth_, depth_[v]);
        }
        descendants_.assign(node_count, 0);
        for (std::size_t v = 0; v < node_count; ++v)
            for (auto a : mask_members(ancestors_[v])) descendants_[a] |= node_bit(v);
    }

    std::size_t node_count() const noexcept { return node_count_; }
    std::size_t reward_node() const noexcept { return node_count_ - 1; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<std::size_t>& parents(std::size_t i) const { return parents_[i]; }
    const std::vector<std::size_t>& children(std::size_t i) const { return children_[i]; }
    const std::vector<std::vector<std::size_t>>& parent_lists() const noexcept { return parents_; }
    const std::vector<std::size_t>& order() const noexcept { return order_; }

    /// Longest directed path ending at i.
    std::size_t depth(std::size_t i) const { return depth_[i]; }
    std::size_t max_depth() const noexcept { return max_depth_; }
    std::size_t max_in_degree() const noexcept { return max_in_degree_; }

    /// Strict ancestors / descendants (the node itself excluded).
    NodeMask ancestors(std::size_t i) const { return ancestors_[i]; }
    NodeMask descendants(std::size_t i) const { return descendants_[i]; }

    bool has_edge(std::size_t from, std::size_t to) const {
        return std::binary_search(edges_.begin(), edges_.end(), Edge{from, to});
    }

private:
    std::size_t node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> depth_;
    std::vector<NodeMask> ancestors_;
    std::vector<NodeMask> descendants_;
    std::size_t max_depth_ = 0;
    std::size_t max_in_degree_ = 0;
};

/// True when every edge of `parents` runs forward in `order`.
inline bool is_valid_order(const std::vector<std::vector<std::size_t>>& parents,
                           const std::vector<std::size_t>& order) {
    const std::size_t n = parents.size();
    if (order.size() != n) return false;
    std::vector<std::size_t> pos(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        if (order[k] >= n || pos[order[k]] != n) return false;
        pos[order[k]] = k;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (auto p : parents[i])
            if (pos[p] >= pos[i]) return false;
    return true;
}

/// Longest-path depth of every node of an arbitrary acyclic parent map,
/// given an order consistent with it.
inline std::vector<std::size_t> depths_along(const std::vector<std::vector<std::size_t>>& parents,
                                             const std::vector<std::size_t>& order) {
    std::vector<std::size_t> depth(parents.size(), 0);
    for (auto v : order)
        for (auto p : parents[v]) depth[v] = std::max(depth[v], depth[p] + 1);
    return depth;
}

}  // namespace causal_bandit
