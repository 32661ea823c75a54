#pragma once

#include "causalsem/evaluation.hpp"
#include "causalsem/model.hpp"
#include "causalsem/semantic_loss.hpp"
#include "causalsem/text_codec.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace causalsem {

struct TrainConfig {
    std::size_t epochs = 3;
    std::size_t batch_size = 8;
    double learning_rate = 1e-2;
    double weight_decay = 0.01;
    std::size_t warmup_steps = 100;
    double lambda_start = 0.05;
    double lambda_end = 0.30;
    bool semantic_enabled = true;
    ConsistencyConvention convention = ConsistencyConvention::OracleAligned;
    std::uint64_t seed = 42;
    std::size_t d_embed = 16;
    std::size_t d_hidden = 32;
    std::size_t max_seq_len = kDefaultMaxSeqLen;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;

    // Defaults with the fine-tuning learning rate of 2e-5.
    static TrainConfig finetune_preset();

    // Throws ConfigError.
    void validate() const;
    ModelShape shape() const;
};

// Optimizer steps for a dataset of `n` examples: epochs · ceil(n / batch).
std::int64_t total_steps(const TrainConfig& config, std::size_t n);

// The λ ramp spans step 0 to the last optimizer step, so the first and last
// logged values are exactly lambda_start and lambda_end.
LambdaSchedule schedule_for(const TrainConfig& config, std::size_t n);

struct StepRecord {
    std::int64_t step = 0;
    double lambda = 0.0;
    double ce = 0.0;
    double semantic = 0.0; // 0 when the semantic term is disabled
    double total = 0.0;
};

struct EpochRecord {
    std::size_t epoch = 0; // 0 is the probe at initialization
    double mean_total = 0.0;
    std::optional<CollapseReport> probe;
    std::optional<Metrics> probe_metrics;
};

struct TrainLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::size_t parse_fallbacks = 0;
    std::size_t lambda_clamps = 0;
    LambdaSchedule schedule;

    // step,lambda,ce,semantic,total with round-trip precision.
    std::string to_csv() const;
    nlohmann::ordered_json summary(const TrainConfig& config) const;
};

struct TrainResult {
    ModelParams model;
    TrainLog log;
};

// Mini-batch training with cross-entropy plus the λ-weighted semantic term
// and AdamW with linear warmup. `probe` is scored at init and after each epoch.
TrainResult train(const std::vector<Example>& data, const TrainConfig& config,
                  const std::vector<Example>& probe = {});

// CE + lam · semantic for one example, as used by the trainer.
double example_loss(const ModelParams& model, const Example& example, double lam,
                    ConsistencyConvention convention = ConsistencyConvention::OracleAligned);

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_coordinate = 0;
    std::size_t coordinates = 0;
};

// Analytic gradient of example_loss against central differences with step
// 1e-4 on `samples` random coordinates.
GradientCheckResult gradient_check(const ModelParams& model, const Example& example, double lam,
                                   std::uint64_t seed, std::size_t samples = 100);

} // namespace causalsem
