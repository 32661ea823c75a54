#include "causalsem/trainer.hpp"

#include "causalsem/errors.hpp"
#include "causalsem/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace causalsem {

namespace {

constexpr double kFiniteDifferenceStep = 1e-4;
constexpr double kRelativeErrorFloor = 1e-8;

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class AdamW {
public:
    AdamW(const TrainConfig& config, const ModelShape& shape)
        : config_(config), m_(ModelParams::zeros(shape)), v_(ModelParams::zeros(shape)) {}

    void step(ModelParams& params, const ModelParams& grad, std::int64_t step_index) {
        const double t = static_cast<double>(step_index + 1);
        const double warm = config_.warmup_steps == 0
                                ? 1.0
                                : std::min(1.0, t / static_cast<double>(config_.warmup_steps));
        const double lr = config_.learning_rate * warm;
        const double c1 = 1.0 - std::pow(config_.beta1, t);
        const double c2 = 1.0 - std::pow(config_.beta2, t);

        auto p = params.tensors();
        auto g = grad.tensors();
        auto m = m_.tensors();
        auto v = v_.tensors();
        for (std::size_t k = 0; k < p.size(); ++k) {
            for (std::size_t i = 0; i < p[k].size(); ++i) {
                const double gi = g[k][i];
                m[k][i] = config_.beta1 * m[k][i] + (1.0 - config_.beta1) * gi;
                v[k][i] = config_.beta2 * v[k][i] + (1.0 - config_.beta2) * gi * gi;
                const double mhat = m[k][i] / c1;
                const double vhat = v[k][i] / c2;
                p[k][i] -= lr * (mhat / (std::sqrt(vhat) + config_.adam_epsilon) + config_.weight_decay * p[k][i]);
            }
        }
    }

private:
    const TrainConfig& config_;
    ModelParams m_;
    ModelParams v_;
};

void zero(ModelParams& grad) {
    for (auto t : grad.tensors()) {
        std::fill(t.begin(), t.end(), 0.0);
    }
}

std::vector<TokenSequence> tokenize_all(const std::vector<Example>& data, std::size_t max_seq_len) {
    std::vector<TokenSequence> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        try {
            out.push_back(tokenize(data[i].premise, data[i].hypothesis, max_seq_len));
        } catch (const TokenizeError& e) {
            throw TokenizeError("training example " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

EpochRecord score_probe(const ModelParams& model, const std::vector<Example>& probe, std::size_t epoch,
                        double mean_total) {
    EpochRecord r;
    r.epoch = epoch;
    r.mean_total = mean_total;
    if (probe.empty()) {
        return r;
    }
    const auto preds = predict_dataset(model, probe);
    if (preds.predictions.empty()) {
        return r;
    }
    std::vector<Label> actual;
    for (std::size_t i : preds.indices) {
        actual.push_back(probe[i].label);
    }
    const auto predicted = preds.labels();
    r.probe = detect_collapse(predicted);
    r.probe_metrics = compute_metrics(compute_confusion(predicted, actual));
    return r;
}

nlohmann::ordered_json probe_json(const EpochRecord& e) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["mean_total_loss"] = e.mean_total;
    if (e.probe) {
        j["yes_count"] = e.probe->yes_count;
        j["no_count"] = e.probe->no_count;
        j["bias_fraction"] = e.probe->bias_fraction;
        j["collapsed"] = e.probe->collapsed;
    }
    if (e.probe_metrics) {
        j["accuracy"] = e.probe_metrics->accuracy;
        j["f1"] = e.probe_metrics->f1;
    }
    return j;
}

} // namespace

TrainConfig TrainConfig::finetune_preset() {
    TrainConfig c;
    c.learning_rate = 2e-5;
    return c;
}

void TrainConfig::validate() const {
    if (epochs == 0 || batch_size == 0) {
        throw ConfigError("epochs and batch size must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning rate must be positive and finite");
    }
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
        throw ConfigError("weight decay must be non-negative");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_epsilon > 0.0)) {
        throw ConfigError("optimizer needs beta1, beta2 in [0,1) and a positive epsilon");
    }
    LambdaSchedule{lambda_start, lambda_end, 1}.validate();
    shape().validate();
}

ModelShape TrainConfig::shape() const {
    ModelShape s;
    s.d_embed = d_embed;
    s.d_hidden = d_hidden;
    s.max_seq_len = max_seq_len;
    return s;
}

std::int64_t total_steps(const TrainConfig& config, std::size_t n) {
    const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
    return static_cast<std::int64_t>(config.epochs * per_epoch);
}

LambdaSchedule schedule_for(const TrainConfig& config, std::size_t n) {
    return LambdaSchedule{config.lambda_start, config.lambda_end, std::max<std::int64_t>(total_steps(config, n) - 1, 1)};
}

std::string TrainLog::to_csv() const {
    std::string out = "step,lambda,ce,semantic,total\n";
    for (const auto& s : steps) {
        out += std::to_string(s.step) + ',' + g17(s.lambda) + ',' + g17(s.ce) + ',' + g17(s.semantic) + ',' +
               g17(s.total) + '\n';
    }
    return out;
}

nlohmann::ordered_json TrainLog::summary(const TrainConfig& config) const {
    nlohmann::ordered_json j;
    j["config"] = {{"epochs", config.epochs},
                   {"batch_size", config.batch_size},
                   {"learning_rate", config.learning_rate},
                   {"weight_decay", config.weight_decay},
                   {"warmup_steps", config.warmup_steps},
                   {"lambda_start", config.lambda_start},
                   {"lambda_end", config.lambda_end},
                   {"semantic_enabled", config.semantic_enabled},
                   {"convention", config.convention == ConsistencyConvention::OracleAligned ? "oracle-aligned"
                                                                                             : "inverted"},
                   {"seed", config.seed},
                   {"d_embed", config.d_embed},
                   {"d_hidden", config.d_hidden},
                   {"max_seq_len", config.max_seq_len},
                   {"beta1", config.beta1},
                   {"beta2", config.beta2},
                   {"adam_epsilon", config.adam_epsilon}};
    j["steps"] = steps.size();
    j["schedule_total_steps"] = schedule.total_steps;
    j["deterministic"] = true;
    j["parse_fallbacks"] = parse_fallbacks;
    j["lambda_clamps"] = lambda_clamps;
    if (!steps.empty()) {
        j["first_lambda"] = steps.front().lambda;
        j["last_lambda"] = steps.back().lambda;
        j["final_total_loss"] = steps.back().total;
    }
    j["probe"] = nlohmann::ordered_json::array();
    for (const auto& e : epochs) {
        j["probe"].push_back(probe_json(e));
    }
    return j;
}

TrainResult train(const std::vector<Example>& data, const TrainConfig& config, const std::vector<Example>& probe) {
    config.validate();
    if (data.empty()) {
        throw ConfigError("training needs at least one example");
    }
    const auto tokens = tokenize_all(data, config.max_seq_len);

    std::vector<std::optional<Label>> targets(data.size());
    if (config.semantic_enabled) {
        DSeparationCache cache;
        for (std::size_t i = 0; i < data.size(); ++i) {
            targets[i] = consistency_target(data[i], config.convention, &cache);
        }
    }

    TrainResult result{init_model(config.shape(), mix_seed(config.seed, 0)), {}};
    ModelParams& model = result.model;
    TrainLog& log = result.log;
    log.schedule = schedule_for(config, data.size());
    log.steps.reserve(static_cast<std::size_t>(total_steps(config, data.size())));
    log.epochs.push_back(score_probe(model, probe, 0, 0.0));

    AdamW optimizer(config, model.shape);
    ModelParams grad = ModelParams::zeros(model.shape);
    Rng order_rng(mix_seed(config.seed, 1));
    std::vector<std::size_t> order(data.size());
    std::int64_t step = 0;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        order_rng.shuffle(order);
        double epoch_total = 0.0;
        std::size_t epoch_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            const auto batch = std::span<const std::size_t>(order).subspan(start, end - start);

            const LambdaValue lv = lambda_at(step, log.schedule);
            log.lambda_clamps += lv.clamped ? 1 : 0;
            const double lam = config.semantic_enabled ? lv.value : 0.0;

            std::vector<Logits> logits(batch.size());
            double ce_sum = 0.0;
            double sem_sum = 0.0;
            std::size_t sem_count = 0;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const std::size_t i = batch[b];
                logits[b] = forward(model, tokens[i]).logits;
                ce_sum += cross_entropy_from_logits(logits[b], data[i].label);
                if (config.semantic_enabled) {
                    if (targets[i]) {
                        sem_sum += semantic_term(logits[b], *targets[i]);
                        ++sem_count;
                    } else {
                        ++log.parse_fallbacks;
                    }
                }
            }
            const double inv_b = 1.0 / static_cast<double>(batch.size());
            const double ce = ce_sum * inv_b;
            const double sem = sem_count == 0 ? 0.0 : sem_sum / static_cast<double>(sem_count);
            const double total = ce + lam * sem;
            if (!std::isfinite(total)) {
                throw NumericError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                                   std::to_string(epoch) + ", lambda " + g17(lam) + ", ce " + g17(ce) +
                                   ", semantic " + g17(sem) + ", first example " + std::to_string(batch[0]) + ")");
            }
            log.steps.push_back({step, lv.value, ce, sem, total});
            epoch_total += total;
            ++epoch_batches;

            zero(grad);
            const bool use_sem = config.semantic_enabled && sem_count > 0 && lam != 0.0;
            const double sem_scale = use_sem ? lam / static_cast<double>(sem_count) : 0.0;
            for (std::size_t b = 0; b < batch.size(); ++b) {
                const std::size_t i = batch[b];
                Logits d = cross_entropy_grad(logits[b], data[i].label);
                d[0] *= inv_b;
                d[1] *= inv_b;
                if (use_sem && targets[i]) {
                    const Logits ds = semantic_term_grad(logits[b], *targets[i]);
                    d[0] += sem_scale * ds[0];
                    d[1] += sem_scale * ds[1];
                }
                backward(model, tokens[i], d, grad);
            }
            optimizer.step(model, grad, step);
            ++step;
        }
        log.epochs.push_back(
            score_probe(model, probe, epoch, epoch_total / static_cast<double>(std::max<std::size_t>(epoch_batches, 1))));
    }
    try {
        model.validate();
    } catch (const ModelFormatError& e) {
        throw NumericError(std::string("training produced an invalid model: ") + e.what());
    }
    return result;
}

double example_loss(const ModelParams& model, const Example& example, double lam, ConsistencyConvention convention) {
    const auto tokens = tokenize(example.premise, example.hypothesis, model.shape.max_seq_len);
    const Logits z = forward(model, tokens).logits;
    double loss = cross_entropy_from_logits(z, example.label);
    if (lam != 0.0) {
        if (const auto target = consistency_target(example, convention)) {
            loss += lam * semantic_term(z, *target);
        }
    }
    return loss;
}

GradientCheckResult gradient_check(const ModelParams& model, const Example& example, double lam, std::uint64_t seed,
                                   std::size_t samples) {
    const auto tokens = tokenize(example.premise, example.hypothesis, model.shape.max_seq_len);
    const Logits z = forward(model, tokens).logits;
    Logits d = cross_entropy_grad(z, example.label);
    if (lam != 0.0) {
        if (const auto target = consistency_target(example)) {
            const Logits ds = semantic_term_grad(z, *target);
            d[0] += lam * ds[0];
            d[1] += lam * ds[1];
        }
    }
    ModelParams grad = ModelParams::zeros(model.shape);
    backward(model, tokens, d, grad);

    ModelParams probe = model;
    Rng rng(seed);
    const std::size_t n = model.parameter_count();
    const auto coords = rng.sample_indices(n, std::min(samples, n));

    GradientCheckResult out;
    out.coordinates = coords.size();
    for (std::size_t c : coords) {
        double& theta = probe.coordinate(c);
        const double saved = theta;
        theta = saved + kFiniteDifferenceStep;
        const double up = example_loss(probe, example, lam);
        theta = saved - kFiniteDifferenceStep;
        const double down = example_loss(probe, example, lam);
        theta = saved;
        const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
        const double analytic = grad.coordinate(c);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelativeErrorFloor});
        const double rel = std::abs(analytic - numeric) / denom;
        if (rel > out.max_relative_error) {
            out.max_relative_error = rel;
            out.worst_coordinate = c;
        }
    }
    return out;
}

} // namespace causalsem
