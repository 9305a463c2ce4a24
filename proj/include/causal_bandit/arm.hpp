#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "causal_bandit/errors.hpp"

namespace causal_bandit {

/// Hard limit on graph size; node sets are stored as 64-bit masks.
inline constexpr std::size_t kMaxNodes = 64;

/// Enumerating the full power set is refused above this many nodes.
inline constexpr std::size_t kMaxEnumerableNodes = 20;

using NodeMask = std::uint64_t;

inline constexpr NodeMask node_bit(std::size_t node) { return NodeMask{1} << node; }

inline std::vector<std::size_t> mask_members(NodeMask mask) {
    std::vector<std::size_t> out;
    while (mask != 0) {
        out.push_back(static_cast<std::size_t>(std::countr_zero(mask)));
        mask &= mask - 1;
    }
    return out;
}

/// A set of intervened nodes (0-based). Bit k set means node k+1 receives
/// its interventional weight column.
class Arm {
public:
    constexpr Arm() = default;
    constexpr explicit Arm(NodeMask mask) : mask_(mask) {}

    static Arm from_members(const std::vector<std::size_t>& nodes) {
        NodeMask m = 0;
        for (auto v : nodes) {
            if (v >= kMaxNodes) throw Error("arm member out of range");
            m |= node_bit(v);
        }
        return Arm(m);
    }
    static Arm from_members(std::initializer_list<std::size_t> nodes) {
        return from_members(std::vector<std::size_t>(nodes));
    }
    static Arm single(std::size_t node) { return Arm(node_bit(node)); }

    constexpr NodeMask mask() const noexcept { return mask_; }
    constexpr bool contains(std::size_t node) const noexcept { return (mask_ >> node) & 1U; }
    constexpr bool empty() const noexcept { return mask_ == 0; }
    int size() const noexcept { return std::popcount(mask_); }
    std::vector<std::size_t> members() const { return mask_members(mask_); }

    friend constexpr bool operator==(Arm a, Arm b) noexcept { return a.mask_ == b.mask_; }

    /// "{1,3}" with 1-based indices.
    std::string to_string() const {
        std::string s = "{";
        bool first = true;
        for (auto v : members()) {
            if (!first) s += ",";
            s += std::to_string(v + 1);
            first = false;
        }
        return s + "}";
    }

private:
    NodeMask mask_ = 0;
};

/// Canonical order: fewer members first, then lexicographic on the sorted
/// member lists.
inline bool canonical_less(Arm a, Arm b) noexcept {
    const int sa = a.size();
    const int sb = b.size();
    if (sa != sb) return sa < sb;
    const NodeMask diff = a.mask() ^ b.mask();
    if (diff == 0) return false;
    // The set holding the lowest differing node sorts first.
    return (a.mask() & (diff & (~diff + 1))) != 0;
}

/// Every subset of `allowed`, in canonical order.
inline std::vector<Arm> enumerate_arms(NodeMask allowed) {
    const auto count = static_cast<std::size_t>(std::popcount(allowed));
    if (count > kMaxEnumerableNodes) {
        throw TooManyArms("refusing to enumerate 2^" + std::to_string(count) +
                          " arms; supply an explicit candidate set");
    }
    std::vector<Arm> arms;
    arms.reserve(std::size_t{1} << count);
    // Standard submask walk.
    NodeMask sub = allowed;
    while (true) {
        arms.emplace_back(sub);
        if (sub == 0) break;
        sub = (sub - 1) & allowed;
    }
    std::sort(arms.begin(), arms.end(), canonical_less);
    return arms;
}

inline std::vector<Arm> enumerate_all_arms(std::size_t node_count) {
    if (node_count > kMaxEnumerableNodes) {
        throw TooManyArms("N = " + std::to_string(node_count) + " exceeds the enumeration guard of " +
                          std::to_string(kMaxEnumerableNodes));
    }
    const NodeMask all = node_count == kMaxNodes ? ~NodeMask{0} : node_bit(node_count) - 1;
    return enumerate_arms(all);
}

}  // namespace causal_bandit
