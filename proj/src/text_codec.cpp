#include "causalsem/text_codec.hpp"

#include "causalsem/errors.hpp"
#include "causalsem/io.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

namespace causalsem {

namespace {

constexpr std::string_view kVocabulary =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .?,-";

constexpr std::string_view kDSepSuffix = "d-separated";

std::array<int, 256> build_char_table() {
    std::array<int, 256> table{};
    table.fill(-1);
    for (std::size_t i = 0; i < kVocabulary.size(); ++i) {
        table[static_cast<unsigned char>(kVocabulary[i])] = static_cast<int>(i + 1);
    }
    return table;
}

const std::array<int, 256>& char_table() {
    static const std::array<int, 256> table = build_char_table();
    return table;
}

std::vector<std::string_view> split_spaces(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t next = text.find(' ', pos);
        const std::size_t end = next == std::string_view::npos ? text.size() : next;
        out.push_back(text.substr(pos, end - pos));
        if (next == std::string_view::npos) {
            break;
        }
        pos = next + 1;
    }
    return out;
}

std::string require_name(std::string_view token, std::string_view text) {
    if (!is_valid_node_name(token)) {
        throw ParseError("malformed node name '" + std::string(token) + "' in hypothesis '" +
                         std::string(text) + "'");
    }
    return std::string(token);
}

} // namespace

std::string_view to_string(Label label) noexcept {
    return label == Label::Yes ? "Yes" : "No";
}

Label parse_label(std::string_view text) {
    if (text == "Yes") {
        return Label::Yes;
    }
    if (text == "No") {
        return Label::No;
    }
    throw ParseError("label must be \"Yes\" or \"No\", got '" + std::string(text) + "'");
}

Query Query::transitivity(std::string a, std::string b) {
    return Query{QueryKind::Transitivity, std::move(a), std::move(b), {}};
}

Query Query::d_separation(std::string a, std::string b, ConditioningSet z) {
    return Query{QueryKind::DSeparation, std::move(a), std::move(b), std::move(z)};
}

void Query::validate() const {
    if (!is_valid_node_name(a) || !is_valid_node_name(b)) {
        throw InvalidQuery("query node names must be alphanumeric and non-empty");
    }
    if (a == b) {
        throw InvalidQuery("query endpoints must differ");
    }
    if (kind == QueryKind::Transitivity && !z.empty()) {
        throw InvalidQuery("transitivity queries take no conditioning set");
    }
    for (const auto& m : z.members()) {
        if (!is_valid_node_name(m)) {
            throw InvalidQuery("conditioning node '" + m + "' is not a valid name");
        }
    }
    if (z.contains(a) || z.contains(b)) {
        throw InvalidQuery("query endpoints must not be conditioned on");
    }
}

std::string render_premise(const Dag& g) {
    std::vector<std::size_t> order(g.edge_count());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    return render_premise(g, order);
}

std::string render_premise(const Dag& g, std::span<const std::size_t> order) {
    if (g.edge_count() == 0) {
        throw InvalidQuery("cannot render a premise for a graph without edges");
    }
    std::vector<char> used(g.edge_count(), 0);
    if (order.size() != g.edge_count()) {
        throw InvalidQuery("edge order is not a permutation of the edge list");
    }
    std::string out;
    for (std::size_t i : order) {
        if (i >= used.size() || used[i]) {
            throw InvalidQuery("edge order is not a permutation of the edge list");
        }
        used[i] = 1;
        const Edge& e = g.edges()[i];
        if (!out.empty()) {
            out += ' ';
        }
        out += e.source;
        out += " causes ";
        out += e.target;
        out += '.';
    }
    return out;
}

std::string render_hypothesis(const Query& q) {
    if (q.kind == QueryKind::Transitivity) {
        return "Does " + q.a + " cause " + q.b + "?";
    }
    std::string out = "Are " + q.a + " and " + q.b + " d-separated";
    if (!q.z.empty()) {
        out += " given ";
        const auto& m = q.z.members();
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            out += m[i];
        }
    }
    out += '?';
    return out;
}

std::vector<Edge> parse_premise(std::string_view text) {
    static const std::regex pattern(R"((\w+) causes (\w+))");
    std::vector<Edge> edges;
    std::set<Edge> seen;
    for (auto it = std::cregex_iterator(text.data(), text.data() + text.size(), pattern);
         it != std::cregex_iterator(); ++it) {
        Edge e{(*it)[1].str(), (*it)[2].str()};
        if (seen.insert(e).second) {
            edges.push_back(std::move(e));
        }
    }
    if (edges.empty()) {
        throw ParseError("premise contains no '<a> causes <b>' statements");
    }
    return edges;
}

Dag graph_from_premise(std::string_view text) {
    const auto edges = parse_premise(text);
    try {
        return Dag::from_edges(edges);
    } catch (const GraphError& e) {
        throw ParseError(std::string("premise does not describe a DAG: ") + e.what());
    }
}

Query parse_hypothesis(std::string_view text) {
    if (text.empty() || text.back() != '?') {
        throw ParseError("hypothesis must end with '?': '" + std::string(text) + "'");
    }
    const std::string_view body = text.substr(0, text.size() - 1);
    const auto tokens = split_spaces(body);

    if (tokens.size() == 4 && tokens[0] == "Does" && tokens[2] == "cause") {
        Query q = Query::transitivity(require_name(tokens[1], text), require_name(tokens[3], text));
        try {
            q.validate();
        } catch (const InvalidQuery& e) {
            throw ParseError(e.what());
        }
        return q;
    }

    if (tokens.size() >= 5 && tokens[0] == "Are" && tokens[2] == "and" && tokens[4] == kDSepSuffix) {
        std::vector<std::string> z;
        if (tokens.size() > 5) {
            if (tokens[5] != "given" || tokens.size() == 6) {
                throw ParseError("malformed conditioning clause in '" + std::string(text) + "'");
            }
            // Members are ", "-separated: every token but the last ends in ','.
            for (std::size_t i = 6; i < tokens.size(); ++i) {
                std::string_view tok = tokens[i];
                const bool last = i + 1 == tokens.size();
                if (!last) {
                    if (tok.empty() || tok.back() != ',') {
                        throw ParseError("conditioning set must be comma-separated in '" +
                                         std::string(text) + "'");
                    }
                    tok.remove_suffix(1);
                }
                z.push_back(require_name(tok, text));
            }
            const std::set<std::string> unique(z.begin(), z.end());
            if (unique.size() != z.size()) {
                throw ParseError("repeated conditioning node in '" + std::string(text) + "'");
            }
        }
        Query q = Query::d_separation(require_name(tokens[1], text), require_name(tokens[3], text),
                                      ConditioningSet(std::move(z)));
        try {
            q.validate();
        } catch (const InvalidQuery& e) {
            throw ParseError(e.what());
        }
        return q;
    }

    throw ParseError("unrecognized hypothesis '" + std::string(text) + "'");
}

Label oracle_label(const Dag& g, const Query& q) {
    if (q.kind == QueryKind::Transitivity) {
        return label_from(find_path(g, q.a, q.b));
    }
    return label_from(d_separated(g, q.a, q.b, q.z));
}

Label oracle_label(const Dag& g, const Query& q, DSeparationCache& cache) {
    if (q.kind == QueryKind::Transitivity) {
        return label_from(find_path(g, q.a, q.b));
    }
    return label_from(cache.query(g, q.a, q.b, q.z));
}

// ─── Tokenizer ──────────────────────────────────────────────

std::string_view vocabulary_chars() noexcept {
    return kVocabulary;
}

std::size_t vocabulary_size() noexcept {
    return kVocabulary.size() + 1;
}

std::uint64_t vocabulary_fingerprint() {
    static const std::uint64_t fingerprint = [] {
        const auto digest = sha256_hex("causalsem-char-vocab-v1:" + std::string(kVocabulary));
        return std::stoull(digest.substr(0, 16), nullptr, 16);
    }();
    return fingerprint;
}

TokenSequence tokenize(std::string_view premise, std::string_view hypothesis, std::size_t max_seq_len) {
    if (max_seq_len == 0) {
        throw TokenizeError("max sequence length must be positive");
    }
    const auto& table = char_table();
    auto encode = [&](std::string_view text, std::vector<std::uint16_t>& out) {
        for (char c : text) {
            const int id = table[static_cast<unsigned char>(c)];
            if (id < 0) {
                throw TokenizeError("character outside vocabulary: code " +
                                    std::to_string(static_cast<unsigned char>(c)));
            }
            out.push_back(static_cast<std::uint16_t>(id));
        }
    };

    std::vector<std::uint16_t> p;
    std::vector<std::uint16_t> h;
    p.reserve(premise.size());
    h.reserve(hypothesis.size());
    encode(premise, p);
    encode(hypothesis, h);

    TokenSequence seq;
    if (p.size() + h.size() + 1 > max_seq_len) {
        seq.truncated = true;
        const std::size_t room = max_seq_len - 1;
        if (h.size() >= room) {
            p.clear();
            h.resize(room);
        } else {
            p.resize(room - h.size());
        }
    }
    seq.ids.reserve(p.size() + h.size() + 1);
    seq.ids.insert(seq.ids.end(), p.begin(), p.end());
    seq.ids.push_back(kSeparatorId);
    seq.ids.insert(seq.ids.end(), h.begin(), h.end());
    return seq;
}

std::pair<std::string, std::string> detokenize(const TokenSequence& tokens) {
    std::pair<std::string, std::string> out;
    bool after_separator = false;
    for (auto id : tokens.ids) {
        if (id == kSeparatorId) {
            if (after_separator) {
                throw TokenizeError("sequence holds more than one separator");
            }
            after_separator = true;
            continue;
        }
        if (id > kVocabulary.size()) {
            throw TokenizeError("token id out of range: " + std::to_string(id));
        }
        (after_separator ? out.second : out.first) += kVocabulary[id - 1];
    }
    if (!after_separator) {
        throw TokenizeError("sequence has no separator");
    }
    return out;
}

} // namespace causalsem
