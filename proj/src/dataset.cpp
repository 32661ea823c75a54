#include "causalsem/dataset.hpp"

#include "causalsem/io.hpp"

#include <algorithm>
#include <set>

namespace causalsem {

namespace {

std::size_t to_size(std::int64_t v) {
    return static_cast<std::size_t>(v);
}

// Seeds the shuffle of adversarial kinds; any stream index past the example
// slots would do.
constexpr std::uint64_t kKindOrderStream = 0xA11CEULL;

Query pick_transitivity_query(const Dag& g, bool balance, Rng& rng) {
    const std::size_t n = g.node_count();
    auto uniform_pair = [&] {
        const std::size_t a = rng.index(n);
        std::size_t b = rng.index(n - 1);
        if (b >= a) {
            ++b;
        }
        return Query::transitivity(g.name(a), g.name(b));
    };
    if (!balance) {
        return uniform_pair();
    }
    const bool want_yes = rng.bernoulli(0.5);
    std::vector<std::pair<std::size_t, std::size_t>> matching;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a != b && find_path(g, g.name(a), g.name(b)) == want_yes) {
                matching.emplace_back(a, b);
            }
        }
    }
    if (matching.empty()) {
        return uniform_pair();
    }
    const auto [a, b] = matching[rng.index(matching.size())];
    return Query::transitivity(g.name(a), g.name(b));
}

Query pick_dsep_query(const Dag& g, IntRange z_size, Rng& rng) {
    const std::size_t n = g.node_count();
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a) {
        ++b;
    }
    std::vector<std::size_t> rest;
    for (std::size_t v = 0; v < n; ++v) {
        if (v != a && v != b) {
            rest.push_back(v);
        }
    }
    const int hi = std::min<int>(z_size.max, static_cast<int>(rest.size()));
    const int lo = std::min(z_size.min, hi);
    const auto k = to_size(rng.uniform_int(lo, hi));
    std::vector<std::string> z;
    for (std::size_t pick : rng.sample_indices(rest.size(), k)) {
        z.push_back(g.name(rest[pick]));
    }
    return Query::d_separation(g.name(a), g.name(b), ConditioningSet(std::move(z)));
}

bool has_isolated_node(const Dag& g) {
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (g.children(v).empty() && g.parents(v).empty()) {
            return true;
        }
    }
    return false;
}

std::vector<std::size_t> identity_order(std::size_t n) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    return order;
}

} // namespace

// ─── Names and enums ────────────────────────────────────────

std::string_view to_string(Task task) noexcept {
    return task == Task::Transitivity ? "transitivity" : "dsep";
}

std::string_view to_string(Suite suite) noexcept {
    switch (suite) {
    case Suite::Train: return "train";
    case Suite::Length: return "length";
    case Suite::Branching: return "branching";
    case Suite::Reversed: return "reversed";
    case Suite::Shuffled: return "shuffled";
    case Suite::LongNames: return "long-names";
    case Suite::Adversarial: return "adversarial";
    }
    return "unknown";
}

Task parse_task(std::string_view text) {
    if (text == "transitivity") {
        return Task::Transitivity;
    }
    if (text == "dsep") {
        return Task::DSeparation;
    }
    throw ConfigError("unknown task '" + std::string(text) + "' (expected transitivity or dsep)");
}

Suite parse_suite(std::string_view text) {
    for (Suite s : {Suite::Train, Suite::Length, Suite::Branching, Suite::Reversed, Suite::Shuffled,
                    Suite::LongNames, Suite::Adversarial}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    throw ConfigError("unknown suite '" + std::string(text) + "'");
}

std::string_view to_string(RejectReason reason) noexcept {
    switch (reason) {
    case RejectReason::PremiseParse: return "premise-parse";
    case RejectReason::HypothesisParse: return "hypothesis-parse";
    case RejectReason::LabelMismatch: return "label-mismatch";
    case RejectReason::EdgeCountLow: return "edge-count-low";
    case RejectReason::EdgeCountHigh: return "edge-count-high";
    case RejectReason::UnreachablePair: return "unreachable-pair";
    case RejectReason::NameCollision: return "name-collision";
    case RejectReason::AttemptLimit: return "attempt-limit";
    case RejectReason::MalformedRecord: return "malformed-record";
    }
    return "unknown";
}

std::string_view to_string(AdversarialKind kind) noexcept {
    switch (kind) {
    case AdversarialKind::IrrelevantNodes: return "irrelevant-nodes";
    case AdversarialKind::BrokenChain: return "broken-chain";
    case AdversarialKind::ExtendedTransitivity: return "extended-transitivity";
    }
    return "unknown";
}

// ─── ValidationReport ───────────────────────────────────────

std::size_t ValidationReport::total_rejections() const {
    std::size_t total = 0;
    for (auto c : rejections) {
        total += c;
    }
    return total;
}

double ValidationReport::acceptance_rate() const {
    return attempted == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempted);
}

void ValidationReport::merge(const ValidationReport& other) {
    attempted += other.attempted;
    accepted += other.accepted;
    for (std::size_t i = 0; i < rejections.size(); ++i) {
        rejections[i] += other.rejections[i];
    }
    failures.insert(failures.end(), other.failures.begin(), other.failures.end());
}

nlohmann::ordered_json to_json(const ValidationReport& report) {
    nlohmann::ordered_json j;
    j["attempted"] = report.attempted;
    j["accepted"] = report.accepted;
    j["acceptance_rate"] = report.acceptance_rate();
    auto& rej = j["rejections"];
    rej = nlohmann::ordered_json::object();
    for (RejectReason r : kAllRejectReasons) {
        rej[std::string(to_string(r))] = report.count(r);
    }
    auto& fails = j["failures"];
    fails = nlohmann::ordered_json::array();
    for (const auto& f : report.failures) {
        fails.push_back({{"line", f.line}, {"reason", to_string(f.reason)}, {"detail", f.detail}});
    }
    return j;
}

// ─── Parameters ─────────────────────────────────────────────

void SuiteParameters::validate() const {
    if (family == GraphFamily::Chain) {
        if (size.min < 2 || size.max < size.min) {
            throw ConfigError("chain length range must satisfy 2 <= min <= max");
        }
        if (p_flip_choices.empty()) {
            throw ConfigError("at least one p_flip value is required");
        }
        for (double p : p_flip_choices) {
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ConfigError("p_flip values must lie in [0, 1]");
            }
        }
    } else {
        if (size.min < 3 || size.max < size.min) {
            throw ConfigError("node count range must satisfy 3 <= min <= max");
        }
        if (!(density.min > 0.0) || density.max < density.min) {
            throw ConfigError("edge density range must satisfy 0 < min <= max");
        }
    }
    if (name_length.min < 1 || name_length.max < name_length.min) {
        throw ConfigError("name length range must satisfy 1 <= min <= max");
    }
    if (z_size.min < 0 || z_size.max < z_size.min || z_size.max > 3) {
        throw ConfigError("conditioning set size range must lie within [0, 3]");
    }
}

SuiteParameters default_parameters(Task task, Suite suite) {
    SuiteParameters p;
    if (task == Task::DSeparation) {
        p.family = GraphFamily::Dag;
    }
    switch (suite) {
    case Suite::Train:
    case Suite::Adversarial:
        break;
    case Suite::Length:
        p.family = GraphFamily::Chain;
        p.size = {7, 15};
        break;
    case Suite::Branching:
        p.family = GraphFamily::Dag;
        p.size = {7, 15};
        p.density = {0.7, 1.2};
        break;
    case Suite::Reversed:
        p.reverse_edges = true;
        break;
    case Suite::Shuffled:
        p.family = GraphFamily::Chain;
        p.p_flip_choices = {0.5};
        p.shuffle_sentences = true;
        break;
    case Suite::LongNames:
        p.name_length = {8, 10};
        break;
    }
    return p;
}

GenerationSpec GenerationSpec::defaults(Task task, Suite suite, std::size_t count, std::uint64_t seed) {
    return GenerationSpec{task, suite, count, seed, default_parameters(task, suite)};
}

void GenerationSpec::validate() const {
    if (count == 0) {
        throw ConfigError("count must be at least 1");
    }
    if (suite == Suite::Adversarial && task != Task::Transitivity) {
        throw ConfigError("the adversarial suite is defined for transitivity queries only");
    }
    parameters.validate();
}

// ─── Validation ─────────────────────────────────────────────

std::optional<RejectReason> validate_example(const Example& example, DSeparationCache* cache) {
    Dag g;
    try {
        g = graph_from_premise(example.premise);
    } catch (const ParseError&) {
        return RejectReason::PremiseParse;
    }
    Query q;
    try {
        q = parse_hypothesis(example.hypothesis);
    } catch (const ParseError&) {
        return RejectReason::HypothesisParse;
    }
    if (!g.contains(q.a) || !g.contains(q.b)) {
        return RejectReason::HypothesisParse;
    }
    for (const auto& m : q.z.members()) {
        if (!g.contains(m)) {
            return RejectReason::HypothesisParse;
        }
    }
    if (q.kind == QueryKind::DSeparation) {
        const std::size_t v = g.node_count();
        const std::size_t e = g.edge_count();
        if (e + 1 < v) {
            return RejectReason::EdgeCountLow;
        }
        if (e > 3 * v) {
            return RejectReason::EdgeCountHigh;
        }
        if (!has_undirected_path(g, q.a, q.b, kMaxPathLength)) {
            return RejectReason::UnreachablePair;
        }
    }
    const Label recomputed = cache ? oracle_label(g, q, *cache) : oracle_label(g, q);
    if (recomputed != example.label) {
        return RejectReason::LabelMismatch;
    }
    return std::nullopt;
}

// ─── Generation ─────────────────────────────────────────────

std::variant<Example, RejectReason> attempt_example(Task task, const SuiteParameters& params, Rng& rng,
                                                    DSeparationCache* cache) {
    Dag g;
    try {
        if (params.family == GraphFamily::Chain) {
            const double p_flip = params.p_flip_choices[rng.index(params.p_flip_choices.size())];
            const auto length = to_size(rng.uniform_int(params.size.min, params.size.max));
            g = chain_over(random_names(length, params.name_length, rng), p_flip, rng);
        } else {
            const auto n = to_size(rng.uniform_int(params.size.min, params.size.max));
            const double density = rng.uniform_real(params.density.min, params.density.max);
            g = generate_dag_fixed(n, density, params.name_length, rng);
        }
    } catch (const GenerationError&) {
        return RejectReason::NameCollision;
    }
    // An isolated node cannot be expressed in the premise text.
    if (has_isolated_node(g)) {
        return RejectReason::UnreachablePair;
    }
    if (params.reverse_edges) {
        g = g.reversed();
    }

    const Query q = task == Task::Transitivity ? pick_transitivity_query(g, params.balance_labels, rng)
                                               : pick_dsep_query(g, params.z_size, rng);

    auto order = identity_order(g.edge_count());
    if (params.shuffle_sentences) {
        rng.shuffle(order);
    }

    Example ex;
    ex.premise = render_premise(g, order);
    ex.hypothesis = render_hypothesis(q);
    if (q.kind == QueryKind::DSeparation) {
        // Early rejection: skip the d-separation oracle on graphs the validity
        // checks would drop anyway.
        if (g.edge_count() + 1 < g.node_count()) {
            return RejectReason::EdgeCountLow;
        }
        if (g.edge_count() > 3 * g.node_count()) {
            return RejectReason::EdgeCountHigh;
        }
        if (!has_undirected_path(g, q.a, q.b)) {
            return RejectReason::UnreachablePair;
        }
    }
    ex.label = cache ? oracle_label(g, q, *cache) : oracle_label(g, q);

    if (auto reason = validate_example(ex, cache)) {
        return *reason;
    }
    return ex;
}

std::optional<Example> generate_example(Task task, const SuiteParameters& params, Rng& rng,
                                        ValidationReport& report, DSeparationCache* cache, int max_attempts) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ++report.attempted;
        auto result = attempt_example(task, params, rng, cache);
        if (auto* ex = std::get_if<Example>(&result)) {
            ++report.accepted;
            return std::move(*ex);
        }
        report.reject(std::get<RejectReason>(result));
    }
    report.reject(RejectReason::AttemptLimit);
    return std::nullopt;
}

GeneratedSuite generate_suite(const GenerationSpec& spec) {
    spec.validate();
    if (spec.suite == Suite::Adversarial) {
        AdversarialSpec adv{spec.count, spec.seed, spec.parameters.name_length};
        auto suite = generate_adversarial(adv);
        return GeneratedSuite{std::move(suite.examples), std::move(suite.report)};
    }

    GeneratedSuite out;
    out.examples.reserve(spec.count);
    DSeparationCache cache;
    const std::size_t budget = spec.count * kSuiteBudgetFactor;
    for (std::uint64_t slot = 0; out.examples.size() < spec.count; ++slot) {
        if (out.report.attempted >= budget) {
            throw SuiteGenerationError("suite '" + std::string(to_string(spec.suite)) + "' produced " +
                                           std::to_string(out.examples.size()) + " of " +
                                           std::to_string(spec.count) + " examples within " +
                                           std::to_string(budget) + " attempts",
                                       out.report);
        }
        Rng rng(mix_seed(spec.seed, slot));
        if (auto ex = generate_example(spec.task, spec.parameters, rng, out.report, &cache)) {
            out.examples.push_back(std::move(*ex));
        }
    }
    return out;
}

// ─── Adversarial ────────────────────────────────────────────

void AdversarialSpec::validate() const {
    if (count == 0) {
        throw ConfigError("count must be at least 1");
    }
    if (name_length.min < 1 || name_length.max < name_length.min) {
        throw ConfigError("name length range must satisfy 1 <= min <= max");
    }
}

AdversarialMix adversarial_mix(std::size_t count) noexcept {
    AdversarialMix mix;
    mix.irrelevant = count * 3 / 10;
    mix.broken = count * 3 / 10;
    mix.extended = count - mix.irrelevant - mix.broken;
    return mix;
}

std::variant<Example, RejectReason> attempt_adversarial(AdversarialKind kind, IntRange name_length, Rng& rng) {
    static const std::vector<double> kFlipChoices{0.0, 0.3, 0.5};

    std::vector<std::size_t> chain_lengths;
    double main_flip = 0.0;
    switch (kind) {
    case AdversarialKind::IrrelevantNodes: {
        chain_lengths.push_back(to_size(rng.uniform_int(3, 5)));
        main_flip = kFlipChoices[rng.index(kFlipChoices.size())];
        const auto distractors = to_size(rng.uniform_int(1, 3));
        for (std::size_t i = 0; i < distractors; ++i) {
            chain_lengths.push_back(to_size(rng.uniform_int(2, 4)));
        }
        break;
    }
    case AdversarialKind::BrokenChain: {
        const auto chains = to_size(rng.uniform_int(2, 3));
        for (std::size_t i = 0; i < chains; ++i) {
            chain_lengths.push_back(to_size(rng.uniform_int(2, 4)));
        }
        break;
    }
    case AdversarialKind::ExtendedTransitivity:
        chain_lengths.push_back(to_size(rng.uniform_int(7, 12)));
        break;
    }

    std::size_t total = 0;
    for (auto len : chain_lengths) {
        total += len;
    }
    std::vector<std::string> names;
    try {
        names = random_names(total, name_length, rng);
    } catch (const GenerationError&) {
        return RejectReason::NameCollision;
    }

    // Components keep disjoint name slices; only the main (first) chain flips.
    std::vector<Dag> components;
    std::size_t offset = 0;
    for (std::size_t c = 0; c < chain_lengths.size(); ++c) {
        std::vector<std::string> slice(names.begin() + static_cast<std::ptrdiff_t>(offset),
                                       names.begin() + static_cast<std::ptrdiff_t>(offset + chain_lengths[c]));
        offset += chain_lengths[c];
        components.push_back(chain_over(std::move(slice), c == 0 ? main_flip : 0.0, rng));
    }

    std::vector<std::string> all_nodes;
    std::vector<Edge> all_edges;
    for (const auto& comp : components) {
        all_nodes.insert(all_nodes.end(), comp.nodes().begin(), comp.nodes().end());
        all_edges.insert(all_edges.end(), comp.edges().begin(), comp.edges().end());
    }
    const Dag g(std::move(all_nodes), std::move(all_edges));

    Query q;
    switch (kind) {
    case AdversarialKind::IrrelevantNodes: {
        const auto& main = components.front().nodes();
        const std::size_t a = rng.index(main.size());
        std::size_t b = rng.index(main.size() - 1);
        if (b >= a) {
            ++b;
        }
        q = Query::transitivity(main[a], main[b]);
        break;
    }
    case AdversarialKind::BrokenChain: {
        const std::size_t ca = rng.index(components.size());
        std::size_t cb = rng.index(components.size() - 1);
        if (cb >= ca) {
            ++cb;
        }
        const auto& na = components[ca].nodes();
        const auto& nb = components[cb].nodes();
        q = Query::transitivity(na[rng.index(na.size())], nb[rng.index(nb.size())]);
        break;
    }
    case AdversarialKind::ExtendedTransitivity: {
        const auto& chain = components.front().nodes();
        q = Query::transitivity(chain.front(), chain.back());
        break;
    }
    }

    Example ex;
    ex.premise = render_premise(g);
    ex.hypothesis = render_hypothesis(q);
    ex.label = oracle_label(g, q);
    if (auto reason = validate_example(ex)) {
        return *reason;
    }
    return ex;
}

AdversarialSuite generate_adversarial(const AdversarialSpec& spec) {
    spec.validate();
    const auto mix = adversarial_mix(spec.count);
    std::vector<AdversarialKind> kinds;
    kinds.reserve(spec.count);
    kinds.insert(kinds.end(), mix.irrelevant, AdversarialKind::IrrelevantNodes);
    kinds.insert(kinds.end(), mix.broken, AdversarialKind::BrokenChain);
    kinds.insert(kinds.end(), mix.extended, AdversarialKind::ExtendedTransitivity);
    Rng order_rng(mix_seed(spec.seed, kKindOrderStream));
    order_rng.shuffle(kinds);

    AdversarialSuite out;
    out.examples.reserve(spec.count);
    out.kinds = kinds;
    const std::size_t budget = spec.count * kSuiteBudgetFactor;
    for (std::size_t slot = 0; slot < kinds.size(); ++slot) {
        Rng rng(mix_seed(spec.seed, slot));
        bool done = false;
        while (!done) {
            for (int attempt = 0; attempt < kAdversarialAttempts && !done; ++attempt) {
                if (out.report.attempted >= budget) {
                    throw SuiteGenerationError("adversarial suite exceeded its attempt budget", out.report);
                }
                ++out.report.attempted;
                auto result = attempt_adversarial(kinds[slot], spec.name_length, rng);
                if (auto* ex = std::get_if<Example>(&result)) {
                    ++out.report.accepted;
                    out.examples.push_back(std::move(*ex));
                    done = true;
                } else {
                    out.report.reject(std::get<RejectReason>(result));
                }
            }
            if (!done) {
                // The mix is exact, so the slot is retried rather than dropped.
                out.report.reject(RejectReason::AttemptLimit);
            }
        }
    }
    return out;
}

// ─── JSONL ──────────────────────────────────────────────────

std::string to_jsonl(const std::vector<Example>& examples) {
    std::string out;
    for (const auto& ex : examples) {
        nlohmann::ordered_json j;
        j["premise"] = ex.premise;
        j["hypothesis"] = ex.hypothesis;
        j["label"] = to_string(ex.label);
        out += j.dump();
        out += '\n';
    }
    return out;
}

Example parse_record(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line.begin(), line.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("record is not a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "premise" && key != "hypothesis" && key != "label") {
            throw ParseError("unknown key '" + key + "'");
        }
        if (!value.is_string()) {
            throw ParseError("value of '" + key + "' is not a string");
        }
    }
    for (const char* key : {"premise", "hypothesis", "label"}) {
        if (!j.contains(key)) {
            throw ParseError(std::string("missing key '") + key + "'");
        }
    }
    Example ex;
    ex.premise = j["premise"].get<std::string>();
    ex.hypothesis = j["hypothesis"].get<std::string>();
    ex.label = parse_label(j["label"].get<std::string>());
    return ex;
}

namespace {

// Splits on '\n'; a final line without terminator still counts.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
        fn(++line_no, text.substr(pos, end - pos));
        pos = end + 1;
    }
}

} // namespace

std::vector<Example> parse_jsonl(std::string_view text) {
    std::vector<Example> out;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        try {
            out.push_back(parse_record(line));
        } catch (const ParseError& e) {
            throw RecordError(line_no, e.what());
        }
    });
    return out;
}

void write_jsonl(const std::vector<Example>& examples, const std::filesystem::path& path) {
    write_file_atomic(path, to_jsonl(examples));
}

std::vector<Example> read_jsonl(const std::filesystem::path& path) {
    return parse_jsonl(read_file(path));
}

ValidationReport validate_lines(std::string_view text) {
    ValidationReport report;
    DSeparationCache cache;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        ++report.attempted;
        Example ex;
        try {
            ex = parse_record(line);
        } catch (const ParseError& e) {
            report.reject(RejectReason::MalformedRecord);
            report.failures.push_back({line_no, RejectReason::MalformedRecord, e.what()});
            return;
        }
        if (auto reason = validate_example(ex, &cache)) {
            report.reject(*reason);
            report.failures.push_back({line_no, *reason, ex.hypothesis});
            return;
        }
        ++report.accepted;
    });
    return report;
}

ValidationReport validate_file(const std::filesystem::path& path) {
    return validate_lines(read_file(path));
}

} // namespace causalsem
