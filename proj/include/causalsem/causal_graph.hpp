#pragma once

#include "causalsem/rng.hpp"

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <list>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace causalsem {

// Path enumeration for d-separation stops at this many edges.
inline constexpr std::size_t kMaxPathLength = 10;
inline constexpr std::size_t kDSepCacheCapacity = 1000;
// Whole-graph name redraws before generation gives up.
inline constexpr int kNameAttempts = 10;
// Per-node out-degree cap in controlled DAG generation.
inline constexpr int kMaxOutDegree = 5;

// Node names are non-empty strings over [a-zA-Z0-9].
bool is_valid_node_name(std::string_view name) noexcept;

struct Edge {
    std::string source;
    std::string target;

    auto operator<=>(const Edge&) const = default;
};

struct IntRange {
    int min = 0;
    int max = 0;

    bool contains(int v) const noexcept { return v >= min && v <= max; }
};

struct RealRange {
    double min = 0.0;
    double max = 0.0;
};

// Sorted, duplicate-free set of node names.
class ConditioningSet {
public:
    ConditioningSet() = default;
    ConditioningSet(std::initializer_list<std::string> names);
    explicit ConditioningSet(std::vector<std::string> names);

    const std::vector<std::string>& members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    bool contains(std::string_view name) const;

    auto operator<=>(const ConditioningSet&) const = default;

private:
    std::vector<std::string> members_;
};

// Directed acyclic graph over named nodes. Construction validates every
// invariant (distinct valid names, known endpoints, no self or duplicate
// edges, acyclic) and throws GraphError otherwise, so a Dag value is always
// well formed. Edge order is preserved for rendering.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> nodes, std::vector<Edge> edges);

    // Nodes are taken in order of first appearance across the edge list.
    static Dag from_edges(std::span<const Edge> edges);

    const std::vector<std::string>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    bool contains(std::string_view name) const;
    // Throws InvalidQuery for unknown names.
    std::size_t index_of(std::string_view name) const;
    const std::string& name(std::size_t index) const { return nodes_.at(index); }

    const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }
    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
    bool has_edge(std::size_t from, std::size_t to) const {
        return adjacency_[from * nodes_.size() + to] != 0;
    }

    // Same nodes, every edge reversed (edge order kept).
    Dag reversed() const;

    // Order-independent description of the node and edge sets. Two graphs
    // with equal keys answer every query identically.
    std::string canonical_key() const;

private:
    std::vector<std::string> nodes_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<unsigned char> adjacency_;
};

// ─── Generation ─────────────────────────────────────────────

struct ChainConfig {
    IntRange length{3, 6};
    IntRange name_length{1, 3};
    double p_flip = 0.0;

    void validate() const;
};

struct DagConfig {
    IntRange num_nodes{3, 6};
    RealRange edge_density{0.3, 0.6};
    IntRange name_length{1, 3};

    void validate() const;
};

// count pairwise-distinct random names; the whole batch is redrawn on a
// collision, up to kNameAttempts times, then GenerationError.
std::vector<std::string> random_names(std::size_t count, IntRange name_length, Rng& rng);

// v1 -> v2 -> ... over the given names, each edge reversed with p_flip.
Dag chain_over(std::vector<std::string> names, double p_flip, Rng& rng);

Dag generate_chain(const ChainConfig& config, Rng& rng);

// Out-degree target k = min(floor(n * density), kMaxOutDegree).
int dag_out_degree_target(std::size_t num_nodes, double density) noexcept;

// Topologically ordered construction: node i links to k sampled later nodes,
// then backbone edges v_i -> v_{i+1} fill in when the graph has fewer than
// n - 1 edges.
Dag generate_dag(const DagConfig& config, Rng& rng);

// Same construction with |V| and density fixed; exposed for tests.
Dag generate_dag_fixed(std::size_t num_nodes, double density, IntRange name_length, Rng& rng);

// ─── Reachability and d-separation ──────────────────────────

// Directed reachability; start == end is reachable.
bool find_path(const Dag& g, std::string_view start, std::string_view end);

// Strict descendants (the node itself excluded).
std::set<std::string> descendants(const Dag& g, std::string_view node);

struct UndirectedPath {
    std::vector<std::string> nodes;

    std::size_t length() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
    auto operator<=>(const UndirectedPath&) const = default;
};

// All simple undirected paths x ... y with at most max_len edges,
// sorted lexicographically by node-name sequence.
std::vector<UndirectedPath> enumerate_undirected_paths(const Dag& g, std::string_view x,
                                                       std::string_view y,
                                                       std::size_t max_len = kMaxPathLength);

// True when some undirected path of at most max_len edges joins x and y.
bool has_undirected_path(const Dag& g, std::string_view x, std::string_view y,
                         std::size_t max_len = kMaxPathLength);

bool is_blocked(const Dag& g, const UndirectedPath& path, const ConditioningSet& z);

// x and y are d-separated by z when every path up to kMaxPathLength edges is
// blocked. Requires x != y and x, y not in z.
bool d_separated(const Dag& g, std::string_view x, std::string_view y, const ConditioningSet& z);

// Bounded LRU memo for d_separated. Keys are the graph's canonical key plus
// the query, so hits are value-identical to a fresh computation. Internally
// synchronized.
class DSeparationCache {
public:
    explicit DSeparationCache(std::size_t capacity = kDSepCacheCapacity);

    bool query(const Dag& g, std::string_view x, std::string_view y, const ConditioningSet& z);

    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t hits() const;
    std::size_t misses() const;

private:
    using Entry = std::pair<std::string, bool>;

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;
    std::unordered_map<std::string, std::list<Entry>::iterator> index_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

} // namespace causalsem
