#include "causalsem/causal_graph.hpp"

#include "causalsem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <unordered_set>

namespace causalsem {

namespace {

constexpr std::string_view kNameAlphabet =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

std::string random_name(IntRange length, Rng& rng) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(length.min, length.max));
    std::string name(n, 'a');
    for (auto& c : name) {
        c = kNameAlphabet[rng.index(kNameAlphabet.size())];
    }
    return name;
}

// Marks every node reachable from `from` (excluding `from` unless on a cycle).
std::vector<char> reachable_from(const Dag& g, std::size_t from) {
    std::vector<char> seen(g.node_count(), 0);
    std::deque<std::size_t> queue(g.children(from).begin(), g.children(from).end());
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        if (seen[v]) {
            continue;
        }
        seen[v] = 1;
        for (std::size_t c : g.children(v)) {
            if (!seen[c]) {
                queue.push_back(c);
            }
        }
    }
    return seen;
}

std::vector<std::size_t> undirected_neighbors(const Dag& g, std::size_t v) {
    std::vector<std::size_t> out = g.children(v);
    out.insert(out.end(), g.parents(v).begin(), g.parents(v).end());
    return out;
}

// Evaluates the blocking rules on a path given by node indices. Collider
// descendant sets are memoized in `desc_cache` for the lifetime of one query.
class BlockingRules {
public:
    BlockingRules(const Dag& g, const ConditioningSet& z) : g_(g), in_z_(g.node_count(), 0),
                                                           desc_cache_(g.node_count()) {
        for (const auto& name : z.members()) {
            in_z_[g.index_of(name)] = 1;
        }
    }

    bool blocked(std::span<const std::size_t> path) {
        for (std::size_t k = 1; k + 1 < path.size(); ++k) {
            const std::size_t prev = path[k - 1];
            const std::size_t cur = path[k];
            const std::size_t next = path[k + 1];
            const bool collider = g_.has_edge(prev, cur) && g_.has_edge(next, cur);
            if (collider) {
                if (!in_z_[cur] && !descendant_in_z(cur)) {
                    return true;
                }
            } else if (in_z_[cur]) {
                // chain or fork
                return true;
            }
        }
        return false;
    }

private:
    bool descendant_in_z(std::size_t v) {
        auto& cached = desc_cache_[v];
        if (!cached) {
            const auto reach = reachable_from(g_, v);
            bool hit = false;
            for (std::size_t u = 0; u < reach.size() && !hit; ++u) {
                hit = reach[u] && in_z_[u];
            }
            cached = hit;
        }
        return *cached;
    }

    const Dag& g_;
    std::vector<char> in_z_;
    std::vector<std::optional<bool>> desc_cache_;
};

// Depth-first enumeration of simple undirected paths from x to y with at most
// max_len edges. The visitor returns false to stop early.
template <typename Visitor>
void for_each_path(const Dag& g, std::size_t x, std::size_t y, std::size_t max_len,
                   Visitor&& visit) {
    std::vector<std::vector<std::size_t>> adj(g.node_count());
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        adj[v] = undirected_neighbors(g, v);
    }
    std::vector<char> on_path(g.node_count(), 0);
    std::vector<std::size_t> path{x};
    on_path[x] = 1;
    bool stop = false;

    auto dfs = [&](auto&& self, std::size_t v) -> void {
        for (std::size_t u : adj[v]) {
            if (stop || on_path[u]) {
                continue;
            }
            path.push_back(u);
            if (u == y) {
                if (!visit(std::span<const std::size_t>(path))) {
                    stop = true;
                }
            } else if (path.size() - 1 < max_len) {
                on_path[u] = 1;
                self(self, u);
                on_path[u] = 0;
            }
            path.pop_back();
        }
    };
    dfs(dfs, x);
}

void check_pair_query(const Dag& g, std::string_view x, std::string_view y) {
    g.index_of(x);
    g.index_of(y);
    if (x == y) {
        throw InvalidQuery("query endpoints must differ: " + std::string(x));
    }
}

} // namespace

bool is_valid_node_name(std::string_view name) noexcept {
    if (name.empty()) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    });
}

// ─── ConditioningSet ────────────────────────────────────────

ConditioningSet::ConditioningSet(std::initializer_list<std::string> names)
    : ConditioningSet(std::vector<std::string>(names)) {}

ConditioningSet::ConditioningSet(std::vector<std::string> names) : members_(std::move(names)) {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool ConditioningSet::contains(std::string_view name) const {
    return std::binary_search(members_.begin(), members_.end(), name);
}

// ─── Dag ────────────────────────────────────────────────────

Dag::Dag(std::vector<std::string> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const std::size_t n = nodes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_valid_node_name(nodes_[i])) {
            throw GraphError("invalid node name '" + nodes_[i] + "'");
        }
        if (!index_.emplace(nodes_[i], i).second) {
            throw GraphError("duplicate node name '" + nodes_[i] + "'");
        }
    }
    children_.assign(n, {});
    parents_.assign(n, {});
    adjacency_.assign(n * n, 0);
    for (const auto& e : edges_) {
        const auto s = index_.find(e.source);
        const auto t = index_.find(e.target);
        if (s == index_.end() || t == index_.end()) {
            throw GraphError("edge endpoint not in node list: " + e.source + " -> " + e.target);
        }
        if (s->second == t->second) {
            throw GraphError("self edge on '" + e.source + "'");
        }
        auto& cell = adjacency_[s->second * n + t->second];
        if (cell) {
            throw GraphError("duplicate edge " + e.source + " -> " + e.target);
        }
        cell = 1;
        children_[s->second].push_back(t->second);
        parents_[t->second].push_back(s->second);
    }

    // Kahn's algorithm; leftover nodes sit on a cycle.
    std::vector<std::size_t> indegree(n);
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v) {
        indegree[v] = parents_[v].size();
        if (indegree[v] == 0) {
            ready.push_back(v);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        ++visited;
        for (std::size_t c : children_[v]) {
            if (--indegree[c] == 0) {
                ready.push_back(c);
            }
        }
    }
    if (visited != n) {
        throw GraphError("graph contains a directed cycle");
    }
}

Dag Dag::from_edges(std::span<const Edge> edges) {
    std::vector<std::string> nodes;
    std::unordered_set<std::string> seen;
    for (const auto& e : edges) {
        for (const auto* name : {&e.source, &e.target}) {
            if (seen.insert(*name).second) {
                nodes.push_back(*name);
            }
        }
    }
    return Dag(std::move(nodes), std::vector<Edge>(edges.begin(), edges.end()));
}

bool Dag::contains(std::string_view name) const {
    return index_.find(std::string(name)) != index_.end();
}

std::size_t Dag::index_of(std::string_view name) const {
    const auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw InvalidQuery("unknown node '" + std::string(name) + "'");
    }
    return it->second;
}

Dag Dag::reversed() const {
    std::vector<Edge> flipped;
    flipped.reserve(edges_.size());
    for (const auto& e : edges_) {
        flipped.push_back({e.target, e.source});
    }
    return Dag(nodes_, std::move(flipped));
}

std::string Dag::canonical_key() const {
    std::vector<std::string> names = nodes_;
    std::sort(names.begin(), names.end());
    std::vector<std::string> arcs;
    arcs.reserve(edges_.size());
    for (const auto& e : edges_) {
        arcs.push_back(e.source + ">" + e.target);
    }
    std::sort(arcs.begin(), arcs.end());
    std::string key;
    for (const auto& n : names) {
        key += n;
        key += ',';
    }
    key += '|';
    for (const auto& a : arcs) {
        key += a;
        key += ',';
    }
    return key;
}

// ─── Generation ─────────────────────────────────────────────

void ChainConfig::validate() const {
    if (length.min < 2 || length.max < length.min) {
        throw ConfigError("chain length range must satisfy 2 <= min <= max");
    }
    if (name_length.min < 1 || name_length.max < name_length.min) {
        throw ConfigError("name length range must satisfy 1 <= min <= max");
    }
    if (!(p_flip >= 0.0 && p_flip <= 1.0)) {
        throw ConfigError("p_flip must lie in [0, 1]");
    }
}

void DagConfig::validate() const {
    if (num_nodes.min < 3 || num_nodes.max < num_nodes.min) {
        throw ConfigError("node count range must satisfy 3 <= min <= max");
    }
    if (!(edge_density.min > 0.0) || edge_density.max < edge_density.min) {
        throw ConfigError("edge density range must satisfy 0 < min <= max");
    }
    if (name_length.min < 1 || name_length.max < name_length.min) {
        throw ConfigError("name length range must satisfy 1 <= min <= max");
    }
}

std::vector<std::string> random_names(std::size_t count, IntRange name_length, Rng& rng) {
    for (int attempt = 0; attempt < kNameAttempts; ++attempt) {
        std::vector<std::string> names;
        names.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            names.push_back(random_name(name_length, rng));
        }
        std::vector<std::string> sorted = names;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
            return names;
        }
    }
    throw GenerationError("name collision after " + std::to_string(kNameAttempts) + " attempts");
}

Dag chain_over(std::vector<std::string> names, double p_flip, Rng& rng) {
    std::vector<Edge> edges;
    edges.reserve(names.size() > 0 ? names.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < names.size(); ++i) {
        // One draw per edge even when p_flip is 0 or 1, so the stream does not
        // depend on the flip probability.
        if (rng.bernoulli(p_flip)) {
            edges.push_back({names[i + 1], names[i]});
        } else {
            edges.push_back({names[i], names[i + 1]});
        }
    }
    return Dag(std::move(names), std::move(edges));
}

Dag generate_chain(const ChainConfig& config, Rng& rng) {
    config.validate();
    const auto length = static_cast<std::size_t>(rng.uniform_int(config.length.min, config.length.max));
    return chain_over(random_names(length, config.name_length, rng), config.p_flip, rng);
}

int dag_out_degree_target(std::size_t num_nodes, double density) noexcept {
    const double raw = std::floor(static_cast<double>(num_nodes) * density);
    return raw >= kMaxOutDegree ? kMaxOutDegree : static_cast<int>(std::max(raw, 0.0));
}

Dag generate_dag_fixed(std::size_t num_nodes, double density, IntRange name_length, Rng& rng) {
    const auto names = random_names(num_nodes, name_length, rng);
    const auto k = static_cast<std::size_t>(dag_out_degree_target(num_nodes, density));
    std::vector<Edge> edges;
    std::vector<char> linked(num_nodes * num_nodes, 0);
    for (std::size_t i = 0; i < num_nodes; ++i) {
        const std::size_t available = num_nodes - i - 1;
        auto picks = rng.sample_indices(available, std::min(k, available));
        std::sort(picks.begin(), picks.end());
        for (std::size_t p : picks) {
            const std::size_t j = i + 1 + p;
            edges.push_back({names[i], names[j]});
            linked[i * num_nodes + j] = 1;
        }
    }
    if (edges.size() + 1 < num_nodes) {
        for (std::size_t i = 0; i + 1 < num_nodes; ++i) {
            if (!linked[i * num_nodes + i + 1]) {
                edges.push_back({names[i], names[i + 1]});
            }
        }
    }
    return Dag(names, std::move(edges));
}

Dag generate_dag(const DagConfig& config, Rng& rng) {
    config.validate();
    const auto n = static_cast<std::size_t>(rng.uniform_int(config.num_nodes.min, config.num_nodes.max));
    const double density = rng.uniform_real(config.edge_density.min, config.edge_density.max);
    return generate_dag_fixed(n, density, config.name_length, rng);
}

// ─── Queries ────────────────────────────────────────────────

bool find_path(const Dag& g, std::string_view start, std::string_view end) {
    const std::size_t s = g.index_of(start);
    const std::size_t t = g.index_of(end);
    if (s == t) {
        return true;
    }
    std::vector<char> visited(g.node_count(), 0);
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (v == t) {
            return true;
        }
        if (visited[v]) {
            continue;
        }
        visited[v] = 1;
        stack.insert(stack.end(), g.children(v).begin(), g.children(v).end());
    }
    return false;
}

std::set<std::string> descendants(const Dag& g, std::string_view node) {
    const auto reach = reachable_from(g, g.index_of(node));
    std::set<std::string> out;
    for (std::size_t v = 0; v < reach.size(); ++v) {
        if (reach[v]) {
            out.insert(g.name(v));
        }
    }
    return out;
}

std::vector<UndirectedPath> enumerate_undirected_paths(const Dag& g, std::string_view x,
                                                       std::string_view y, std::size_t max_len) {
    check_pair_query(g, x, y);
    std::vector<UndirectedPath> paths;
    for_each_path(g, g.index_of(x), g.index_of(y), max_len, [&](std::span<const std::size_t> p) {
        UndirectedPath path;
        path.nodes.reserve(p.size());
        for (std::size_t v : p) {
            path.nodes.push_back(g.name(v));
        }
        paths.push_back(std::move(path));
        return true;
    });
    std::sort(paths.begin(), paths.end());
    return paths;
}

bool has_undirected_path(const Dag& g, std::string_view x, std::string_view y, std::size_t max_len) {
    const std::size_t s = g.index_of(x);
    const std::size_t t = g.index_of(y);
    // BFS distances; the shortest walk between two nodes is a simple path.
    std::vector<std::size_t> dist(g.node_count(), SIZE_MAX);
    std::deque<std::size_t> queue{s};
    dist[s] = 0;
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        if (v == t) {
            return dist[v] <= max_len;
        }
        for (std::size_t u : undirected_neighbors(g, v)) {
            if (dist[u] == SIZE_MAX) {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    return false;
}

bool is_blocked(const Dag& g, const UndirectedPath& path, const ConditioningSet& z) {
    std::vector<std::size_t> idx;
    idx.reserve(path.nodes.size());
    for (const auto& name : path.nodes) {
        idx.push_back(g.index_of(name));
    }
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        if (!g.has_edge(idx[k], idx[k + 1]) && !g.has_edge(idx[k + 1], idx[k])) {
            throw InvalidQuery("path step " + path.nodes[k] + " - " + path.nodes[k + 1] +
                               " is not an edge");
        }
    }
    BlockingRules rules(g, z);
    return rules.blocked(idx);
}

bool d_separated(const Dag& g, std::string_view x, std::string_view y, const ConditioningSet& z) {
    check_pair_query(g, x, y);
    if (z.contains(x) || z.contains(y)) {
        throw InvalidQuery("query endpoints must not be in the conditioning set");
    }
    BlockingRules rules(g, z);
    bool all_blocked = true;
    for_each_path(g, g.index_of(x), g.index_of(y), kMaxPathLength,
                  [&](std::span<const std::size_t> p) {
                      if (!rules.blocked(p)) {
                          all_blocked = false;
                      }
                      return all_blocked;
                  });
    return all_blocked;
}

// ─── DSeparationCache ───────────────────────────────────────

DSeparationCache::DSeparationCache(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) {
        throw ConfigError("cache capacity must be positive");
    }
}

bool DSeparationCache::query(const Dag& g, std::string_view x, std::string_view y,
                             const ConditioningSet& z) {
    std::string key = g.canonical_key();
    key += '|';
    key += x;
    key += '|';
    key += y;
    key += '|';
    for (const auto& m : z.members()) {
        key += m;
        key += ',';
    }
    {
        std::lock_guard lock(mutex_);
        if (auto it = index_.find(key); it != index_.end()) {
            order_.splice(order_.begin(), order_, it->second);
            ++hits_;
            return it->second->second;
        }
        ++misses_;
    }
    // Computed outside the lock; concurrent misses on one key agree anyway.
    const bool result = d_separated(g, x, y, z);
    std::lock_guard lock(mutex_);
    if (index_.find(key) == index_.end()) {
        order_.emplace_front(key, result);
        index_.emplace(std::move(key), order_.begin());
        if (order_.size() > capacity_) {
            index_.erase(order_.back().first);
            order_.pop_back();
        }
    }
    return result;
}

std::size_t DSeparationCache::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

std::size_t DSeparationCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::size_t DSeparationCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

} // namespace causalsem
