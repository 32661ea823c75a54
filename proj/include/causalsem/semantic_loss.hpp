#pragma once

#include "causalsem/causal_graph.hpp"
#include "causalsem/text_codec.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>

namespace causalsem {

// Added inside the log of the semantic term.
inline constexpr double kSemanticEpsilon = 1e-8;

// Two-class logits indexed by Label (No = 0, Yes = 1).
using Logits = std::array<double, 2>;

inline double& at(Logits& z, Label label) { return z[static_cast<std::size_t>(label)]; }
inline double at(const Logits& z, Label label) { return z[static_cast<std::size_t>(label)]; }

struct PredictionProbs {
    double p_yes = 0.5;
    double p_no = 0.5;

    // Max-shifted softmax.
    static PredictionProbs from_logits(const Logits& logits) noexcept;

    double of(Label label) const noexcept { return label == Label::Yes ? p_yes : p_no; }
    // Argmax with ties going to No.
    Label predicted() const noexcept { return p_yes > p_no ? Label::Yes : Label::No; }

    // Throws NumericError unless both are finite, in [0,1] and sum to 1 within 1e-9.
    void validate() const;
};

// λ(t) = λ_start + (t / T)(λ_end − λ_start)
struct LambdaSchedule {
    double lambda_start = 0.05;
    double lambda_end = 0.30;
    std::int64_t total_steps = 1;

    void validate() const;
};

struct LambdaValue {
    double value = 0.0;
    bool clamped = false; // t fell outside [0, T]
};

// Exact at both endpoints. Steps outside [0, T] are clamped and flagged.
LambdaValue lambda_at(std::int64_t step, const LambdaSchedule& schedule);

// How the d-separation consistency target is chosen. OracleAligned rewards
// the oracle answer to the rendered hypothesis ("Yes" means d-separated).
// Inverted rewards P(Yes) when the nodes are *not* d-separated, i.e. the
// opposite answer; kept only to study that variant.
enum class ConsistencyConvention { OracleAligned, Inverted };

struct ConsistencyScore {
    double c = 0.0;
    bool truth = false;          // oracle answer to the hypothesis
    Label target = Label::No;    // the class whose probability c is
};

// Consistency from already-parsed structure.
ConsistencyScore consistency(const Dag& g, const Query& q, const PredictionProbs& probs,
                             ConsistencyConvention convention = ConsistencyConvention::OracleAligned,
                             DSeparationCache* cache = nullptr);

// Re-parses premise and hypothesis (the stored label is ignored). nullopt when
// either fails to parse or the query names unknown nodes.
std::optional<ConsistencyScore> consistency(const Example& example, const PredictionProbs& probs,
                                            ConsistencyConvention convention = ConsistencyConvention::OracleAligned,
                                            DSeparationCache* cache = nullptr);

// The parse-and-oracle half of consistency(): which class the semantic term
// rewards. nullopt on parse failure.
std::optional<Label> consistency_target(const Example& example,
                                        ConsistencyConvention convention = ConsistencyConvention::OracleAligned,
                                        DSeparationCache* cache = nullptr);

// −(1/N) Σ log(c_i + ε). Empty input throws NumericError.
double semantic_loss_batch(std::span<const ConsistencyScore> scores);

// ce + lam · sem; non-finite inputs or negative lam throw NumericError.
double total_loss(double ce, double sem, double lam);

// −log(max(p(label), ε)).
double cross_entropy(const PredictionProbs& probs, Label label);
// Same quantity via log-sum-exp on the logits.
double cross_entropy_from_logits(const Logits& logits, Label label);

// ∂/∂z of cross_entropy_from_logits; zero once the ε floor is active.
Logits cross_entropy_grad(const Logits& logits, Label label);
// −log(p(target) + ε) and its gradient with respect to the logits.
double semantic_term(const Logits& logits, Label target);
Logits semantic_term_grad(const Logits& logits, Label target);

} // namespace causalsem
