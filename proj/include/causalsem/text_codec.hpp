#pragma once

#include "causalsem/causal_graph.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace causalsem {

enum class Label { No, Yes };

std::string_view to_string(Label label) noexcept;
// Accepts exactly "Yes" or "No".
Label parse_label(std::string_view text);
inline Label label_from(bool holds) noexcept { return holds ? Label::Yes : Label::No; }

enum class QueryKind { Transitivity, DSeparation };

struct Query {
    QueryKind kind = QueryKind::Transitivity;
    std::string a;
    std::string b;
    ConditioningSet z; // always empty for Transitivity

    static Query transitivity(std::string a, std::string b);
    static Query d_separation(std::string a, std::string b, ConditioningSet z = {});

    // Throws InvalidQuery on a == b, bad names, z on a transitivity query, or
    // an endpoint inside z.
    void validate() const;

    bool operator==(const Query&) const = default;
};

struct Example {
    std::string premise;
    std::string hypothesis;
    Label label = Label::No;

    bool operator==(const Example&) const = default;
};

// "<source> causes <target>." per edge, space-joined, in edge order.
std::string render_premise(const Dag& g);
// order is a permutation of edge indices.
std::string render_premise(const Dag& g, std::span<const std::size_t> order);

// "Does A cause B?" / "Are A and B d-separated?" /
// "Are A and B d-separated given Z1, Z2?" (z sorted).
std::string render_hypothesis(const Query& q);

// Every non-overlapping match of `(\w+) causes (\w+)`, duplicates removed,
// first-occurrence order. Zero matches throws ParseError.
std::vector<Edge> parse_premise(std::string_view text);

// parse_premise followed by Dag construction; a cyclic or self-looping
// premise is a ParseError as well.
Dag graph_from_premise(std::string_view text);

// Recognizes both hypothesis templates; throws ParseError when malformed.
Query parse_hypothesis(std::string_view text);

// Oracle answer of q on g: directed reachability for transitivity, Yes when
// d-separated for d-separation queries.
Label oracle_label(const Dag& g, const Query& q);
Label oracle_label(const Dag& g, const Query& q, DSeparationCache& cache);

// ─── Character tokenizer ────────────────────────────────────

inline constexpr std::size_t kDefaultMaxSeqLen = 512;
inline constexpr std::uint16_t kSeparatorId = 0;

// Characters with ids 1..N, in id order. The separator is id 0.
std::string_view vocabulary_chars() noexcept;
std::size_t vocabulary_size() noexcept;
// Stable 64-bit fingerprint of the vocabulary table; stored in model files.
std::uint64_t vocabulary_fingerprint();

struct TokenSequence {
    std::vector<std::uint16_t> ids;
    bool truncated = false;
};

// premise chars, separator, hypothesis chars. When the result would exceed
// max_seq_len, premise characters are dropped from its end first, then
// hypothesis characters, and `truncated` is set. Unknown characters throw
// TokenizeError.
TokenSequence tokenize(std::string_view premise, std::string_view hypothesis,
                       std::size_t max_seq_len = kDefaultMaxSeqLen);

// Inverse of tokenize for untruncated sequences.
std::pair<std::string, std::string> detokenize(const TokenSequence& tokens);

} // namespace causalsem
