#include "doctest.h"

#include "causalsem/errors.hpp"
#include "causalsem/rng.hpp"
#include "causalsem/text_codec.hpp"

#include <numeric>

using namespace causalsem;

namespace {

Dag abc() { return Dag::from_edges(std::vector<Edge>{{"A", "B"}, {"B", "C"}}); }

} // namespace

TEST_CASE("render_premise") {
    CHECK(render_premise(abc()) == "A causes B. B causes C.");
    CHECK(render_premise(Dag::from_edges(std::vector<Edge>{{"X", "Y"}})) == "X causes Y.");
    const std::vector<std::size_t> reversed{1, 0};
    CHECK(render_premise(abc(), reversed) == "B causes C. A causes B.");

    const std::vector<std::size_t> not_a_permutation{0, 0};
    CHECK_THROWS_AS(render_premise(abc(), not_a_permutation), InvalidQuery);
    CHECK_THROWS_AS(render_premise(Dag({"A", "B"}, {})), InvalidQuery);
}

TEST_CASE("render_hypothesis") {
    CHECK(render_hypothesis(Query::transitivity("A", "J")) == "Does A cause J?");
    CHECK(render_hypothesis(Query::d_separation("X", "Y", {"Z"})) == "Are X and Y d-separated given Z?");
    CHECK(render_hypothesis(Query::d_separation("X", "Y")) == "Are X and Y d-separated?");
    CHECK(render_hypothesis(Query::d_separation("X", "Y", {"W", "Z", "A"})) ==
          "Are X and Y d-separated given A, W, Z?");
}

TEST_CASE("parse_premise") {
    CHECK(parse_premise("A causes B. B causes C.") == std::vector<Edge>{{"A", "B"}, {"B", "C"}});
    CHECK_THROWS_AS(parse_premise("hello world"), ParseError);
    CHECK(parse_premise("A causes B. A causes B.") == std::vector<Edge>{{"A", "B"}});
    CHECK_THROWS_AS(graph_from_premise("A causes B. B causes A."), ParseError);
    CHECK_THROWS_AS(graph_from_premise("A causes A."), ParseError);
}

TEST_CASE("parse_hypothesis") {
    CHECK(parse_hypothesis("Does A cause C?") == Query::transitivity("A", "C"));
    CHECK(parse_hypothesis("Are X and Y d-separated given Z, W?") == Query::d_separation("X", "Y", {"W", "Z"}));
    CHECK(parse_hypothesis("Are X and Y d-separated?") == Query::d_separation("X", "Y"));
    CHECK_THROWS_AS(parse_hypothesis("Does A cause?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis("Does A cause A?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis("Are X and Y d-separated given X?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis("Are X and Y d-separated given?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis("Are X and Y d-separated given Z, Z?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis("Is A a cause of B?"), ParseError);
    CHECK_THROWS_AS(parse_hypothesis(""), ParseError);
}

TEST_CASE("round trips over random graphs, orders and queries") {
    Rng rng(1001);
    for (int i = 0; i < 10000; ++i) {
        const Dag g = (i % 2 == 0) ? generate_chain(ChainConfig{{2, 15}, {1, 10}, 0.5}, rng)
                                   : generate_dag(DagConfig{{3, 15}, {0.3, 1.2}, {1, 10}}, rng);
        std::vector<std::size_t> order(g.edge_count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        const auto parsed = parse_premise(render_premise(g, order));
        REQUIRE(std::set<Edge>(parsed.begin(), parsed.end()) == std::set<Edge>(g.edges().begin(), g.edges().end()));
        REQUIRE(parsed.size() == g.edge_count());

        const auto& v = g.nodes();
        const std::size_t a = rng.index(v.size());
        std::size_t b = rng.index(v.size() - 1);
        b += b >= a ? 1 : 0;
        const Query t = Query::transitivity(v[a], v[b]);
        REQUIRE(parse_hypothesis(render_hypothesis(t)) == t);
        std::vector<std::string> z;
        for (std::size_t k = 0; k < v.size() && z.size() < 3; ++k) {
            if (k != a && k != b && rng.bernoulli(0.3)) {
                z.push_back(v[k]);
            }
        }
        const Query d = Query::d_separation(v[a], v[b], ConditioningSet(z));
        REQUIRE(parse_hypothesis(render_hypothesis(d)) == d);
    }
}

TEST_CASE("oracle_label") {
    const Dag chain = Dag::from_edges(std::vector<Edge>{{"X", "Z"}, {"Z", "Y"}});
    CHECK(oracle_label(chain, Query::transitivity("X", "Y")) == Label::Yes);
    CHECK(oracle_label(chain, Query::transitivity("Y", "X")) == Label::No);
    CHECK(oracle_label(chain, Query::d_separation("X", "Y", {"Z"})) == Label::Yes);
    CHECK(oracle_label(chain, Query::d_separation("X", "Y")) == Label::No);
    DSeparationCache cache;
    CHECK(oracle_label(chain, Query::d_separation("X", "Y", {"Z"}), cache) == Label::Yes);
}

TEST_CASE("labels") {
    CHECK(parse_label("Yes") == Label::Yes);
    CHECK(parse_label("No") == Label::No);
    CHECK_THROWS_AS(parse_label("yes"), ParseError);
    CHECK(to_string(Label::Yes) == "Yes");
}

TEST_CASE("tokenizer vocabulary") {
    CHECK(vocabulary_size() == 68);
    CHECK(vocabulary_chars() == "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .?,-");
    CHECK(vocabulary_fingerprint() == 0x36c4431fb77f062eULL);
}

TEST_CASE("tokenize") {
    SUBCASE("empty inputs give the separator alone") {
        const auto t = tokenize("", "");
        CHECK(t.ids == std::vector<std::uint16_t>{kSeparatorId});
        CHECK_FALSE(t.truncated);
    }
    SUBCASE("golden sequence") {
        const auto t = tokenize("A causes B.", "Does A cause B?");
        const std::vector<std::uint16_t> golden{27, 63, 3,  1,  21, 19, 5, 19, 63, 28, 64, 0,  30, 15,
                                                5,  19, 63, 27, 63, 3,  1, 21, 19, 5,  63, 28, 65};
        CHECK(t.ids.size() == 27);
        CHECK(t.ids == golden);
        CHECK(t.ids == tokenize("A causes B.", "Does A cause B?").ids);
    }
    SUBCASE("unknown characters are rejected") {
        CHECK_THROWS_AS(tokenize("A causes B!", "x"), TokenizeError);
        CHECK_THROWS_AS(tokenize("A", "caf\xc3\xa9"), TokenizeError);
    }
    SUBCASE("overflow truncates the premise first") {
        const auto t = tokenize("abcdef", "xyz", 6);
        CHECK(t.truncated);
        CHECK(t.ids.size() == 6);
        const auto [p, h] = detokenize(t);
        CHECK(p == "ab");
        CHECK(h == "xyz");
    }
    SUBCASE("detokenize inverts tokenize") {
        const auto [p, h] = detokenize(tokenize("A causes B. B causes C.", "Are A and C d-separated given B?"));
        CHECK(p == "A causes B. B causes C.");
        CHECK(h == "Are A and C d-separated given B?");
    }
}

TEST_CASE("tokenize is injective on distinct inputs") {
    Rng rng(6);
    const auto chars = vocabulary_chars();
    std::set<std::vector<std::uint16_t>> seen;
    std::set<std::pair<std::string, std::string>> inputs;
    for (int i = 0; i < 3000; ++i) {
        std::string p, h;
        for (auto n = rng.uniform_int(0, 6); n > 0; --n) p += chars[rng.index(chars.size())];
        for (auto n = rng.uniform_int(0, 6); n > 0; --n) h += chars[rng.index(chars.size())];
        if (inputs.insert({p, h}).second) {
            REQUIRE(seen.insert(tokenize(p, h).ids).second);
        }
    }
}
