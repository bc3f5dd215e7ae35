#ifndef VPPSCHED_TOPOLOGY_HPP
#define VPPSCHED_TOPOLOGY_HPP

// Communication graphs between agents: complete, ring and Watts-Strogatz
// small world. Every graph is undirected, loop-free and connected.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace vppsched {

enum class TopologyKind : std::uint8_t { complete, ring, small_world };

inline constexpr std::string_view to_string(TopologyKind k)
{
    switch (k) {
    case TopologyKind::complete: return "complete";
    case TopologyKind::ring: return "ring";
    case TopologyKind::small_world: return "small_world";
    }
    return "?";
}

inline TopologyKind topology_kind_from_string(std::string_view name)
{
    for (auto k : {TopologyKind::complete, TopologyKind::ring, TopologyKind::small_world})
        if (to_string(k) == name)
            return k;
    throw ConfigError("unknown topology '" + std::string(name) + "'");
}

struct TopologySpec {
    TopologyKind kind = TopologyKind::complete;
    int k = 2;           // small world: neighbours on each side of the lattice
    double p = 0.0;      // small world: rewiring probability
    friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

struct Topology {
    TopologySpec spec;
    std::size_t n_agents = 0;
    std::vector<std::vector<std::size_t>> adjacency; // sorted neighbour lists
};

inline bool is_connected(const std::vector<std::vector<std::size_t>>& adjacency)
{
    if (adjacency.empty())
        return true;
    std::vector<bool> seen(adjacency.size(), false);
    std::queue<std::size_t> open;
    open.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!open.empty()) {
        const std::size_t v = open.front();
        open.pop();
        for (auto w : adjacency[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++count;
                open.push(w);
            }
        }
    }
    return count == adjacency.size();
}

namespace detail {

    inline std::vector<std::vector<std::size_t>> to_lists(const std::vector<std::set<std::size_t>>& sets)
    {
        std::vector<std::vector<std::size_t>> out;
        out.reserve(sets.size());
        for (const auto& s : sets)
            out.emplace_back(s.begin(), s.end());
        return out;
    }

} // namespace detail

inline Topology build_topology(const TopologySpec& spec, std::size_t n_agents, std::uint64_t seed)
{
    if (n_agents < 1)
        throw ConfigError("topology needs at least one agent");
    Topology t{spec, n_agents, {}};
    std::vector<std::set<std::size_t>> adj(n_agents);
    auto link = [&](std::size_t a, std::size_t b) {
        if (a != b) {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    };

    switch (spec.kind) {
    case TopologyKind::complete:
        for (std::size_t a = 0; a < n_agents; ++a)
            for (std::size_t b = a + 1; b < n_agents; ++b)
                link(a, b);
        break;
    case TopologyKind::ring:
        for (std::size_t a = 0; a < n_agents; ++a)
            link(a, (a + 1) % n_agents);
        break;
    case TopologyKind::small_world: {
        if (spec.k < 1 || !(spec.p >= 0.0 && spec.p <= 1.0))
            throw ConfigError("small world needs k >= 1 and 0 <= p <= 1");
        if (n_agents > 1 && static_cast<std::size_t>(2 * spec.k) >= n_agents)
            throw ConfigError("small world needs 2k < number of agents");
        Rng rng(seed);
        for (int attempt = 0; attempt < 100; ++attempt) {
            for (auto& s : adj)
                s.clear();
            for (std::size_t a = 0; a < n_agents; ++a)
                for (int d = 1; d <= spec.k; ++d)
                    link(a, (a + static_cast<std::size_t>(d)) % n_agents);
            for (std::size_t a = 0; a < n_agents; ++a) {
                for (int d = 1; d <= spec.k; ++d) {
                    const std::size_t b = (a + static_cast<std::size_t>(d)) % n_agents;
                    if (uniform01(rng) >= spec.p || !adj[a].contains(b))
                        continue;
                    const std::size_t c = uniform_index(rng, n_agents);
                    if (c == a || adj[a].contains(c))
                        continue;
                    adj[a].erase(b);
                    adj[b].erase(a);
                    link(a, c);
                }
            }
            if (is_connected(detail::to_lists(adj))) {
                t.adjacency = detail::to_lists(adj);
                return t;
            }
        }
        throw ConfigError("small world parameterisation produced no connected graph");
    }
    }
    t.adjacency = detail::to_lists(adj);
    if (!is_connected(t.adjacency))
        throw ConfigError("topology is not connected");
    return t;
}

} // namespace vppsched

#endif
