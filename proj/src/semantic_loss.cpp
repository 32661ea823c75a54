#include "causalsem/semantic_loss.hpp"

#include "causalsem/errors.hpp"

#include <algorithm>
#include <cmath>

namespace causalsem {

namespace {

double log_sum_exp(const Logits& z) {
    const double m = std::max(z[0], z[1]);
    return m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
}

Label other(Label label) {
    return label == Label::Yes ? Label::No : Label::Yes;
}

} // namespace

PredictionProbs PredictionProbs::from_logits(const Logits& logits) noexcept {
    const double m = std::max(logits[0], logits[1]);
    const double e_no = std::exp(logits[0] - m);
    const double e_yes = std::exp(logits[1] - m);
    const double sum = e_no + e_yes;
    return PredictionProbs{e_yes / sum, e_no / sum};
}

void PredictionProbs::validate() const {
    if (!std::isfinite(p_yes) || !std::isfinite(p_no) || p_yes < 0.0 || p_yes > 1.0 || p_no < 0.0 ||
        p_no > 1.0 || std::abs(p_yes + p_no - 1.0) > 1e-9) {
        throw NumericError("prediction probabilities must be a distribution over {Yes, No}");
    }
}

void LambdaSchedule::validate() const {
    if (!std::isfinite(lambda_start) || !std::isfinite(lambda_end) || lambda_start < 0.0 ||
        lambda_end < lambda_start) {
        throw ConfigError("lambda schedule needs 0 <= lambda_start <= lambda_end");
    }
    if (total_steps < 1) {
        throw ConfigError("lambda schedule needs at least one step");
    }
}

LambdaValue lambda_at(std::int64_t step, const LambdaSchedule& schedule) {
    schedule.validate();
    LambdaValue out;
    if (step < 0 || step > schedule.total_steps) {
        out.clamped = true;
        step = std::clamp<std::int64_t>(step, 0, schedule.total_steps);
    }
    const double fraction = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
    out.value = std::lerp(schedule.lambda_start, schedule.lambda_end, fraction);
    return out;
}

ConsistencyScore consistency(const Dag& g, const Query& q, const PredictionProbs& probs,
                             ConsistencyConvention convention, DSeparationCache* cache) {
    const Label answer = cache ? oracle_label(g, q, *cache) : oracle_label(g, q);
    Label target = answer;
    if (convention == ConsistencyConvention::Inverted && q.kind == QueryKind::DSeparation) {
        target = other(answer);
    }
    return ConsistencyScore{probs.of(target), answer == Label::Yes, target};
}

std::optional<ConsistencyScore> consistency(const Example& example, const PredictionProbs& probs,
                                            ConsistencyConvention convention, DSeparationCache* cache) {
    try {
        const Dag g = graph_from_premise(example.premise);
        const Query q = parse_hypothesis(example.hypothesis);
        return consistency(g, q, probs, convention, cache);
    } catch (const ParseError&) {
        return std::nullopt;
    } catch (const InvalidQuery&) {
        return std::nullopt;
    }
}

std::optional<Label> consistency_target(const Example& example, ConsistencyConvention convention,
                                        DSeparationCache* cache) {
    const auto score = consistency(example, PredictionProbs{}, convention, cache);
    if (!score) {
        return std::nullopt;
    }
    return score->target;
}

double semantic_loss_batch(std::span<const ConsistencyScore> scores) {
    if (scores.empty()) {
        throw NumericError("semantic loss is undefined for an empty batch");
    }
    double sum = 0.0;
    for (const auto& s : scores) {
        sum += std::log(s.c + kSemanticEpsilon);
    }
    return -sum / static_cast<double>(scores.size());
}

double total_loss(double ce, double sem, double lam) {
    if (!std::isfinite(ce) || !std::isfinite(sem) || !std::isfinite(lam)) {
        throw NumericError("total loss inputs must be finite");
    }
    if (lam < 0.0) {
        throw NumericError("lambda must be non-negative");
    }
    return ce + lam * sem;
}

double cross_entropy(const PredictionProbs& probs, Label label) {
    return -std::log(std::max(probs.of(label), kSemanticEpsilon));
}

double cross_entropy_from_logits(const Logits& logits, Label label) {
    const double nll = log_sum_exp(logits) - at(logits, label);
    return std::min(nll, -std::log(kSemanticEpsilon));
}

Logits cross_entropy_grad(const Logits& logits, Label label) {
    if (log_sum_exp(logits) - at(logits, label) >= -std::log(kSemanticEpsilon)) {
        return {0.0, 0.0};
    }
    const auto p = PredictionProbs::from_logits(logits);
    Logits g{p.p_no, p.p_yes};
    at(g, label) -= 1.0;
    return g;
}

double semantic_term(const Logits& logits, Label target) {
    return -std::log(PredictionProbs::from_logits(logits).of(target) + kSemanticEpsilon);
}

Logits semantic_term_grad(const Logits& logits, Label target) {
    const auto p = PredictionProbs::from_logits(logits);
    const double pt = p.of(target);
    // d p_t / d z_k = p_t (δ_tk − p_k)
    const double scale = -pt / (pt + kSemanticEpsilon);
    Logits g{-p.p_no, -p.p_yes};
    at(g, target) += 1.0;
    g[0] *= scale;
    g[1] *= scale;
    return g;
}

} // namespace causalsem
