#pragma once

#include "causalsem/model.hpp"
#include "causalsem/text_codec.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace causalsem {

// Strict: a dominant-class share must exceed this to count as collapse.
inline constexpr double kCollapseThreshold = 0.95;
inline constexpr int kReportSchemaVersion = 1;

struct Prediction {
    Label label = Label::No;
    double p_yes = 0.5;
    double p_no = 0.5;
};

struct PredictionSet {
    std::vector<Prediction> predictions;
    std::vector<std::size_t> indices; // example index of each prediction
    std::size_t unpredictable = 0;    // examples that failed to tokenize

    std::vector<Label> labels() const;
};

PredictionSet predict_dataset(const ModelParams& model, const std::vector<Example>& examples);

// Positive class is Yes.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + tn + fp + fn; }
    std::size_t predicted_yes() const noexcept { return tp + fp; }
    std::size_t predicted_no() const noexcept { return tn + fn; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix compute_confusion(std::span<const Label> predicted, std::span<const Label> actual);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const Metrics&) const = default;
};

// Zero denominators yield 0. An empty matrix throws.
Metrics compute_metrics(const ConfusionMatrix& cm);

struct CollapseReport {
    std::size_t yes_count = 0;
    std::size_t no_count = 0;
    double bias_fraction = 0.0;      // max(yes, no) / total
    bool collapsed = false;
    std::optional<Label> dominant;   // majority class; none on a tie

    bool operator==(const CollapseReport&) const = default;
};

CollapseReport detect_collapse(std::size_t yes_count, std::size_t no_count,
                               double threshold = kCollapseThreshold);
CollapseReport detect_collapse(std::span<const Label> predictions, double threshold = kCollapseThreshold);

struct SuiteResult {
    std::string name;
    std::string dataset_hash;
    ConfusionMatrix confusion;
    Metrics metrics;
    CollapseReport collapse;
    std::size_t unpredictable = 0;

    bool operator==(const SuiteResult&) const = default;
};

// Metrics averaged without weights over suites; counts pooled.
struct AggregateResult {
    Metrics mean;
    ConfusionMatrix pooled;
    CollapseReport pooled_collapse;
    std::size_t collapsed_suites = 0;

    bool operator==(const AggregateResult&) const = default;
};

AggregateResult aggregate(std::span<const SuiteResult> suites);

struct EvalReport {
    int schema_version = kReportSchemaVersion;
    std::string model_hash;
    std::uint64_t seed = 0;
    std::vector<SuiteResult> suites;
    AggregateResult overall;

    bool operator==(const EvalReport&) const = default;
};

SuiteResult evaluate_suite(const ModelParams& model, const std::string& name,
                           const std::vector<Example>& examples, std::string dataset_hash = {});

// Fills `overall` from `suites`.
EvalReport build_report(std::string model_hash, std::uint64_t seed, std::vector<SuiteResult> suites);

enum class ReportFormat { Json, Csv };

// Keys sorted, two-space indent.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
// Columns: suite,tp,tn,fp,fn,accuracy,precision,recall,f1,yes_count,no_count,collapsed
// One row per suite, then an "aggregate" row.
std::string report_to_csv(const EvalReport& report);
void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path);

} // namespace causalsem
