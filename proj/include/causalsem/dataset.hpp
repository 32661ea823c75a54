#pragma once

#include "causalsem/causal_graph.hpp"
#include "causalsem/errors.hpp"
#include "causalsem/text_codec.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace causalsem {

inline constexpr int kExampleAttempts = 10;
inline constexpr int kAdversarialAttempts = 15;
// Whole-suite attempt budget, as a multiple of the requested count.
inline constexpr std::size_t kSuiteBudgetFactor = 50;

enum class Task { Transitivity, DSeparation };
enum class Suite { Train, Length, Branching, Reversed, Shuffled, LongNames, Adversarial };

std::string_view to_string(Task task) noexcept;
std::string_view to_string(Suite suite) noexcept;
// "transitivity" | "dsep"
Task parse_task(std::string_view text);
// "train" | "length" | "branching" | "reversed" | "shuffled" | "long-names" | "adversarial"
Suite parse_suite(std::string_view text);

enum class RejectReason {
    PremiseParse,
    HypothesisParse,
    LabelMismatch,
    EdgeCountLow,
    EdgeCountHigh,
    UnreachablePair,
    NameCollision,
    AttemptLimit,
    MalformedRecord,
};

inline constexpr std::array kAllRejectReasons = {
    RejectReason::PremiseParse,    RejectReason::HypothesisParse, RejectReason::LabelMismatch,
    RejectReason::EdgeCountLow,    RejectReason::EdgeCountHigh,   RejectReason::UnreachablePair,
    RejectReason::NameCollision,   RejectReason::AttemptLimit,    RejectReason::MalformedRecord,
};

std::string_view to_string(RejectReason reason) noexcept;

struct ValidationReport {
    struct LineFailure {
        std::size_t line = 0; // 1-based
        RejectReason reason = RejectReason::MalformedRecord;
        std::string detail;
    };

    std::size_t attempted = 0;
    std::size_t accepted = 0;
    std::array<std::size_t, kAllRejectReasons.size()> rejections{};
    std::vector<LineFailure> failures; // filled by validate_file only

    void reject(RejectReason reason) { ++rejections[static_cast<std::size_t>(reason)]; }
    std::size_t count(RejectReason reason) const { return rejections[static_cast<std::size_t>(reason)]; }
    std::size_t total_rejections() const;
    double acceptance_rate() const;
    void merge(const ValidationReport& other);
};

nlohmann::ordered_json to_json(const ValidationReport& report);

enum class GraphFamily { Chain, Dag };

// Sampling ranges for one suite. Chain-family suites draw p_flip uniformly
// from p_flip_choices for every example.
struct SuiteParameters {
    GraphFamily family = GraphFamily::Chain;
    IntRange size{3, 6}; // chain length or |V|
    IntRange name_length{1, 3};
    std::vector<double> p_flip_choices{0.0, 0.3, 0.5};
    RealRange density{0.3, 0.6};
    IntRange z_size{0, 3};
    bool reverse_edges = false;
    bool shuffle_sentences = false;
    // Best-effort 50/50 Yes/No for transitivity queries.
    bool balance_labels = false;

    void validate() const;
};

SuiteParameters default_parameters(Task task, Suite suite);

struct GenerationSpec {
    Task task = Task::Transitivity;
    Suite suite = Suite::Train;
    std::size_t count = 1;
    std::uint64_t seed = 0;
    SuiteParameters parameters;

    static GenerationSpec defaults(Task task, Suite suite, std::size_t count, std::uint64_t seed);
    void validate() const;
};

struct GeneratedSuite {
    std::vector<Example> examples;
    ValidationReport report;
};

// Raised when a suite cannot be completed inside its attempt budget.
class SuiteGenerationError : public GenerationError {
public:
    SuiteGenerationError(const std::string& what, ValidationReport partial)
        : GenerationError(what), partial_(std::move(partial)) {}

    const ValidationReport& partial() const noexcept { return partial_; }

private:
    ValidationReport partial_;
};

// Runs every validation stage on the example's text alone: premise parse,
// hypothesis parse (including nodes unknown to the premise), graph validity
// for d-separation queries, then label recomputation. nullopt means accepted.
std::optional<RejectReason> validate_example(const Example& example, DSeparationCache* cache = nullptr);

// One generation attempt: build a graph, pick a query, render, re-validate.
std::variant<Example, RejectReason> attempt_example(Task task, const SuiteParameters& params, Rng& rng,
                                                    DSeparationCache* cache = nullptr);

// Up to max_attempts calls to attempt_example. Each attempt and rejection is
// recorded in report; exhaustion records AttemptLimit and returns nullopt.
std::optional<Example> generate_example(Task task, const SuiteParameters& params, Rng& rng,
                                        ValidationReport& report, DSeparationCache* cache = nullptr,
                                        int max_attempts = kExampleAttempts);

// Exactly spec.count examples. Example slot i draws from its own stream
// mix_seed(seed, i), so output is independent of how slots are scheduled.
// Adversarial suites are delegated to generate_adversarial.
GeneratedSuite generate_suite(const GenerationSpec& spec);

// ─── Adversarial suite ──────────────────────────────────────

enum class AdversarialKind { IrrelevantNodes, BrokenChain, ExtendedTransitivity };

std::string_view to_string(AdversarialKind kind) noexcept;

struct AdversarialSpec {
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    IntRange name_length{1, 3};

    void validate() const;
};

struct AdversarialMix {
    std::size_t irrelevant = 0;
    std::size_t broken = 0;
    std::size_t extended = 0;
};

// 30% / 30% / remainder.
AdversarialMix adversarial_mix(std::size_t count) noexcept;

struct AdversarialSuite {
    std::vector<Example> examples;
    std::vector<AdversarialKind> kinds; // parallel to examples
    ValidationReport report;
};

std::variant<Example, RejectReason> attempt_adversarial(AdversarialKind kind, IntRange name_length, Rng& rng);

AdversarialSuite generate_adversarial(const AdversarialSpec& spec);

// ─── JSONL ──────────────────────────────────────────────────

// One {"premise","hypothesis","label"} object per line, compact, '\n'-terminated.
std::string to_jsonl(const std::vector<Example>& examples);
std::vector<Example> parse_jsonl(std::string_view text);
void write_jsonl(const std::vector<Example>& examples, const std::filesystem::path& path);
// Throws RecordError naming the first bad line.
std::vector<Example> read_jsonl(const std::filesystem::path& path);

// Single record; throws ParseError for malformed JSON, missing or unknown
// keys, non-string values, or a bad label.
Example parse_record(std::string_view line);

ValidationReport validate_lines(std::string_view text);
ValidationReport validate_file(const std::filesystem::path& path);

} // namespace causalsem
