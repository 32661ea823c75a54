#include "doctest.h"

#include "causalsem/causal_graph.hpp"
#include "causalsem/errors.hpp"
#include "causalsem/rng.hpp"
#include "oracles.hpp"

using namespace causalsem;

namespace {

Dag chain_abc() { return Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"B", "C"}}); }

Dag random_dag(Rng& rng, std::size_t max_nodes) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(3, static_cast<std::int64_t>(max_nodes)));
    return generate_dag_fixed(n, rng.uniform_real(0.1, 1.2), {1, 3}, rng);
}

} // namespace

TEST_CASE("node names are alphanumeric and non-empty") {
    CHECK(is_valid_node_name("a"));
    CHECK(is_valid_node_name("Xy9"));
    CHECK_FALSE(is_valid_node_name(""));
    CHECK_FALSE(is_valid_node_name("a_b"));
    CHECK_FALSE(is_valid_node_name("a b"));
    CHECK_FALSE(is_valid_node_name("d-sep"));
}

TEST_CASE("Dag construction enforces every invariant") {
    CHECK_THROWS_AS(Dag({"A"}, {{"A", "A"}}), GraphError);
    CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "B"}, {"A", "B"}}), GraphError);
    CHECK_THROWS_AS(Dag({"A", "B"}, {{"A", "C"}}), GraphError);
    CHECK_THROWS_AS(Dag({"A", "A"}, {}), GraphError);
    CHECK_THROWS_AS(Dag({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}, {"C", "A"}}), GraphError);
    CHECK_THROWS_AS(Dag({"A", "b_"}, {}), GraphError);

    const Dag g = chain_abc();
    CHECK(g.nodes() == std::vector<std::string>{"A", "B", "C"});
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(1, 0));
    CHECK_THROWS_AS(g.index_of("Q"), InvalidQuery);
}

TEST_CASE("reversed graph flips every edge and keeps order") {
    const Dag r = chain_abc().reversed();
    REQUIRE(r.edges().size() == 2);
    CHECK(r.edges()[0] == Edge{"B", "A"});
    CHECK(r.edges()[1] == Edge{"C", "B"});
}

TEST_CASE("canonical key ignores edge and node order") {
    const Dag a({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    const Dag b({"C", "B", "A"}, {{"B", "C"}, {"A", "B"}});
    CHECK(a.canonical_key() == b.canonical_key());
    CHECK(a.canonical_key() != a.reversed().canonical_key());
}

TEST_CASE("generate_chain") {
    SUBCASE("zero flip probability yields the forward chain in order") {
        Rng rng(1);
        const Dag g = generate_chain(ChainConfig{{3, 3}, {1, 3}, 0.0}, rng);
        REQUIRE(g.edge_count() == 2);
        const auto& v = g.nodes();
        CHECK(g.edges()[0] == Edge{v[0], v[1]});
        CHECK(g.edges()[1] == Edge{v[1], v[2]});
    }
    SUBCASE("a chain of six nodes has five edges") {
        Rng rng(99);
        CHECK(generate_chain(ChainConfig{{6, 6}, {1, 3}, 0.0}, rng).edge_count() == 5);
    }
    SUBCASE("flip probability one reverses every edge") {
        Rng rng(3);
        const Dag g = generate_chain(ChainConfig{{4, 4}, {1, 3}, 1.0}, rng);
        const auto& v = g.nodes();
        REQUIRE(g.edge_count() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(g.edges()[i] == Edge{v[i + 1], v[i]});
        }
    }
    SUBCASE("invalid configurations are rejected") {
        Rng rng(0);
        CHECK_THROWS_AS(generate_chain(ChainConfig{{1, 3}, {1, 3}, 0.0}, rng), ConfigError);
        CHECK_THROWS_AS(generate_chain(ChainConfig{{3, 4}, {0, 3}, 0.0}, rng), ConfigError);
        CHECK_THROWS_AS(generate_chain(ChainConfig{{3, 4}, {1, 3}, 1.5}, rng), ConfigError);
    }
}

TEST_CASE("generate_dag out-degree target and backbone") {
    CHECK(dag_out_degree_target(5, 0.2) == 1);
    CHECK(dag_out_degree_target(10, 1.2) == 5);
    CHECK(dag_out_degree_target(4, 0.01) == 0);

    Rng rng(5);
    const Dag g = generate_dag_fixed(4, 0.01, {1, 3}, rng);
    REQUIRE(g.edge_count() == 3);
    const auto& v = g.nodes();
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(g.edges()[i] == Edge{v[i], v[i + 1]});
    }

    Rng bad(0);
    CHECK_THROWS_AS(generate_dag(DagConfig{{2, 4}, {0.3, 0.6}, {1, 3}}, bad), ConfigError);
    CHECK_THROWS_AS(generate_dag(DagConfig{{3, 4}, {0.0, 0.6}, {1, 3}}, bad), ConfigError);
}

TEST_CASE("every node's out-degree matches the clipped target") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(3, 15));
        const double rho = rng.uniform_real(0.3, 1.2);
        const Dag g = generate_dag_fixed(n, rho, {1, 3}, rng);
        const auto k = static_cast<std::size_t>(dag_out_degree_target(n, rho));
        std::size_t sampled_edges = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sampled_edges += std::min(k, n - 1 - i);
        }
        if (sampled_edges >= n - 1) {
            CHECK(g.edge_count() == sampled_edges);
        } else {
            CHECK(g.edge_count() >= n - 1);
        }
    }
}

TEST_CASE("generators always produce valid DAGs") {
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        const Dag g = (i % 2 == 0) ? generate_chain(ChainConfig{{2, 15}, {1, 3}, rng.uniform01()}, rng)
                                   : generate_dag(DagConfig{{3, 15}, {0.1, 1.2}, {1, 10}}, rng);
        REQUIRE(oracle::is_acyclic(g));
        for (const auto& name : g.nodes()) {
            REQUIRE(is_valid_node_name(name));
        }
    }
}

TEST_CASE("generation is deterministic per seed") {
    Rng a(77), b(77);
    for (int i = 0; i < 50; ++i) {
        CHECK(generate_dag(DagConfig{}, a).canonical_key() == generate_dag(DagConfig{}, b).canonical_key());
    }
}

TEST_CASE("random names exhaust their retries on an impossible request") {
    Rng rng(1);
    CHECK_THROWS_AS(random_names(100, {1, 1}, rng), GenerationError);
    const auto names = random_names(5, {1, 1}, rng);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == 5);
}

TEST_CASE("find_path") {
    CHECK(find_path(chain_abc(), "A", "C"));
    CHECK_FALSE(find_path(chain_abc(), "C", "A"));
    CHECK(find_path(chain_abc(), "B", "B"));
    const Dag broken = Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"X", "Y"}});
    CHECK_FALSE(find_path(broken, "A", "Y"));
    CHECK_THROWS_AS(find_path(broken, "A", "Q"), InvalidQuery);
}

TEST_CASE("find_path agrees with the transitive closure") {
    Rng rng(31337);
    for (int i = 0; i < 300; ++i) {
        const Dag g = random_dag(rng, 10);
        const oracle::Graph og(g);
        const auto reach = oracle::transitive_closure(og);
        for (std::size_t u = 0; u < g.node_count(); ++u) {
            for (std::size_t v = 0; v < g.node_count(); ++v) {
                REQUIRE(find_path(g, g.name(u), g.name(v)) == reach[og.index.at(g.name(u))][og.index.at(g.name(v))]);
            }
        }
    }
}

TEST_CASE("descendants") {
    CHECK(descendants(chain_abc(), "A") == std::set<std::string>{"B", "C"});
    CHECK(descendants(chain_abc(), "C").empty());
    const Dag collider = Dag::from_edges(std::vector<Edge>{{"A", "C"}, {"B", "C"}});
    CHECK(descendants(collider, "A") == std::set<std::string>{"C"});
    CHECK_THROWS_AS(descendants(collider, "Z"), InvalidQuery);
}

TEST_CASE("enumerate_undirected_paths") {
    const auto chain = enumerate_undirected_paths(chain_abc(), "A", "C");
    REQUIRE(chain.size() == 1);
    CHECK(chain[0].nodes == std::vector<std::string>{"A", "B", "C"});

    const Dag broken = Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"X", "Y"}});
    CHECK(enumerate_undirected_paths(broken, "A", "Y").empty());

    const Dag diamond = Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
    const auto paths = enumerate_undirected_paths(diamond, "A", "D");
    REQUIRE(paths.size() == 2);
    CHECK(paths[0].nodes == std::vector<std::string>{"A", "B", "D"});
    CHECK(paths[1].nodes == std::vector<std::string>{"A", "C", "D"});

    CHECK_THROWS_AS(enumerate_undirected_paths(diamond, "A", "A"), InvalidQuery);
    CHECK_THROWS_AS(enumerate_undirected_paths(diamond, "A", "Q"), InvalidQuery);
}

TEST_CASE("path enumeration matches brute force, including the length cap") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const Dag g = random_dag(rng, 7);
        const std::size_t cap = static_cast<std::size_t>(rng.uniform_int(1, 6));
        const auto& v = g.nodes();
        for (std::size_t a = 0; a < v.size(); ++a) {
            for (std::size_t b = 0; b < v.size(); ++b) {
                if (a == b) {
                    continue;
                }
                const auto got = enumerate_undirected_paths(g, v[a], v[b], cap);
                const auto want = oracle::simple_paths(g, v[a], v[b], cap);
                REQUIRE(got.size() == want.size());
                for (std::size_t k = 0; k < got.size(); ++k) {
                    REQUIRE(got[k].nodes == want[k]);
                    REQUIRE(got[k].length() <= cap);
                }
                REQUIRE(has_undirected_path(g, v[a], v[b], cap) == !want.empty());
            }
        }
    }
}

TEST_CASE("is_blocked") {
    const Dag chain = Dag::from_edges(std::vector<Edge>{{"X", "Z"}, {"Z", "Y"}});
    const UndirectedPath xzy{{"X", "Z", "Y"}};
    CHECK(is_blocked(chain, xzy, {"Z"}));
    CHECK_FALSE(is_blocked(chain, xzy, {}));

    const Dag fork = Dag::from_edges(std::vector<Edge>{{"Z", "X"}, {"Z", "Y"}});
    CHECK(is_blocked(fork, xzy, {"Z"}));
    CHECK_FALSE(is_blocked(fork, xzy, {}));

    const Dag collider = Dag::from_edges(std::vector<Edge>{{"X", "Z"}, {"Y", "Z"}, {"Z", "W"}});
    CHECK(is_blocked(collider, xzy, {}));
    CHECK_FALSE(is_blocked(collider, xzy, {"Z"}));
    CHECK_FALSE(is_blocked(collider, xzy, {"W"}));

    const Dag edge = Dag::from_edges(std::vector<Edge>{{"X", "Y"}});
    CHECK_FALSE(is_blocked(edge, UndirectedPath{{"X", "Y"}}, {}));
}

TEST_CASE("d_separated") {
    const Dag chain = Dag::from_edges(std::vector<Edge>{{"X", "Z"}, {"Z", "Y"}});
    CHECK(d_separated(chain, "X", "Y", {"Z"}));
    CHECK_FALSE(d_separated(chain, "X", "Y", {}));
    CHECK_THROWS_AS(d_separated(chain, "X", "X", {}), InvalidQuery);
    CHECK_THROWS_AS(d_separated(chain, "X", "Y", {"X"}), InvalidQuery);
    CHECK_THROWS_AS(d_separated(chain, "X", "Q", {}), InvalidQuery);

    const Dag collider = Dag::from_edges(std::vector<Edge>{{"X", "Z"}, {"Y", "Z"}, {"Z", "W"}});
    CHECK(d_separated(collider, "X", "Y", {}));
    CHECK_FALSE(d_separated(collider, "X", "Y", {"W"}));
}

TEST_CASE("d_separated matches the moralization oracle and is symmetric") {
    Rng rng(4242);
    for (int i = 0; i < 400; ++i) {
        const Dag g = random_dag(rng, 7);
        const auto& v = g.nodes();
        for (int q = 0; q < 20; ++q) {
            const std::size_t a = rng.index(v.size());
            std::size_t b = rng.index(v.size() - 1);
            b += b >= a ? 1 : 0;
            std::vector<std::string> rest;
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (k != a && k != b) {
                    rest.push_back(v[k]);
                }
            }
            rng.shuffle(rest);
            rest.resize(std::min<std::size_t>(rest.size(), static_cast<std::size_t>(rng.uniform_int(0, 3))));
            const ConditioningSet z(rest);
            const bool got = d_separated(g, v[a], v[b], z);
            REQUIRE(got == oracle::d_separated(g, v[a], v[b], rest));
            REQUIRE(got == d_separated(g, v[b], v[a], z));
        }
    }
}

TEST_CASE("memoized d-separation equals fresh computation") {
    DSeparationCache cache(64);
    Rng rng(555);
    std::vector<Dag> pool;
    for (int i = 0; i < 30; ++i) {
        pool.push_back(random_dag(rng, 8));
    }
    for (int i = 0; i < 10000; ++i) {
        const Dag& g = pool[rng.index(pool.size())];
        const auto& v = g.nodes();
        const std::size_t a = rng.index(v.size());
        std::size_t b = rng.index(v.size() - 1);
        b += b >= a ? 1 : 0;
        std::vector<std::string> z;
        for (std::size_t k = 0; k < v.size() && z.size() < 3; ++k) {
            if (k != a && k != b && rng.bernoulli(0.3)) {
                z.push_back(v[k]);
            }
        }
        const ConditioningSet cz(z);
        REQUIRE(cache.query(g, v[a], v[b], cz) == d_separated(g, v[a], v[b], cz));
    }
    CHECK(cache.size() <= cache.capacity());
    CHECK(cache.hits() > 0);
    CHECK(cache.hits() + cache.misses() == 10000);
}

TEST_CASE("cache evicts the least recently used entry") {
    DSeparationCache cache(2);
    const Dag g = Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"B", "C"}, {"C", "D"}});
    cache.query(g, "A", "B", {});
    cache.query(g, "A", "C", {});
    cache.query(g, "A", "B", {}); // refresh A,B
    cache.query(g, "A", "D", {}); // evicts A,C
    CHECK(cache.size() == 2);
    const auto misses = cache.misses();
    cache.query(g, "A", "B", {});
    CHECK(cache.misses() == misses);
    cache.query(g, "A", "C", {});
    CHECK(cache.misses() == misses + 1);
}

TEST_CASE("ConditioningSet is sorted and duplicate-free") {
    const ConditioningSet z{"W", "Z", "W", "A"};
    CHECK(z.members() == std::vector<std::string>{"A", "W", "Z"});
    CHECK(z.contains("Z"));
    CHECK_FALSE(z.contains("Q"));
}
