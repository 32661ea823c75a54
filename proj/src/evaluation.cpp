#include "causalsem/evaluation.hpp"

#include "causalsem/errors.hpp"
#include "causalsem/io.hpp"

#include <algorithm>
#include <cstdio>

namespace causalsem {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

nlohmann::json to_json(const Metrics& m) {
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

nlohmann::json to_json(const CollapseReport& c) {
    nlohmann::json j = {{"yes_count", c.yes_count},
                        {"no_count", c.no_count},
                        {"bias_fraction", c.bias_fraction},
                        {"collapsed", c.collapsed}};
    j["dominant_class"] = c.dominant ? nlohmann::json(std::string(to_string(*c.dominant))) : nlohmann::json(nullptr);
    return j;
}

ConfusionMatrix confusion_from(const nlohmann::json& j) {
    return {j.at("tp").get<std::size_t>(), j.at("tn").get<std::size_t>(), j.at("fp").get<std::size_t>(),
            j.at("fn").get<std::size_t>()};
}

Metrics metrics_from(const nlohmann::json& j) {
    return {j.at("accuracy").get<double>(), j.at("precision").get<double>(), j.at("recall").get<double>(),
            j.at("f1").get<double>()};
}

CollapseReport collapse_from(const nlohmann::json& j) {
    CollapseReport c;
    c.yes_count = j.at("yes_count").get<std::size_t>();
    c.no_count = j.at("no_count").get<std::size_t>();
    c.bias_fraction = j.at("bias_fraction").get<double>();
    c.collapsed = j.at("collapsed").get<bool>();
    if (!j.at("dominant_class").is_null()) {
        c.dominant = parse_label(j.at("dominant_class").get<std::string>());
    }
    return c;
}

} // namespace

std::vector<Label> PredictionSet::labels() const {
    std::vector<Label> out;
    out.reserve(predictions.size());
    for (const auto& p : predictions) {
        out.push_back(p.label);
    }
    return out;
}

PredictionSet predict_dataset(const ModelParams& model, const std::vector<Example>& examples) {
    PredictionSet out;
    out.predictions.reserve(examples.size());
    out.indices.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        TokenSequence tokens;
        try {
            tokens = tokenize(examples[i].premise, examples[i].hypothesis, model.shape.max_seq_len);
        } catch (const TokenizeError&) {
            ++out.unpredictable;
            continue;
        }
        const auto result = forward(model, tokens);
        out.predictions.push_back({result.probs.predicted(), result.probs.p_yes, result.probs.p_no});
        out.indices.push_back(i);
    }
    return out;
}

ConfusionMatrix compute_confusion(std::span<const Label> predicted, std::span<const Label> actual) {
    if (predicted.size() != actual.size()) {
        throw Error("prediction and label counts differ (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(actual.size()) + ")");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool pred_yes = predicted[i] == Label::Yes;
        const bool true_yes = actual[i] == Label::Yes;
        if (pred_yes) {
            ++(true_yes ? cm.tp : cm.fp);
        } else {
            ++(true_yes ? cm.fn : cm.tn);
        }
    }
    return cm;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw Error("metrics are undefined for an empty confusion matrix");
    }
    Metrics m;
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    const double pr = m.precision + m.recall;
    m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
    return m;
}

CollapseReport detect_collapse(std::size_t yes_count, std::size_t no_count, double threshold) {
    const std::size_t total = yes_count + no_count;
    if (total == 0) {
        throw Error("collapse detection needs at least one prediction");
    }
    CollapseReport r;
    r.yes_count = yes_count;
    r.no_count = no_count;
    r.bias_fraction = ratio(std::max(yes_count, no_count), total);
    r.collapsed = r.bias_fraction > threshold;
    if (yes_count != no_count) {
        r.dominant = yes_count > no_count ? Label::Yes : Label::No;
    }
    return r;
}

CollapseReport detect_collapse(std::span<const Label> predictions, double threshold) {
    const auto yes = static_cast<std::size_t>(std::count(predictions.begin(), predictions.end(), Label::Yes));
    return detect_collapse(yes, predictions.size() - yes, threshold);
}

AggregateResult aggregate(std::span<const SuiteResult> suites) {
    AggregateResult out;
    if (suites.empty()) {
        return out;
    }
    for (const auto& s : suites) {
        out.mean.accuracy += s.metrics.accuracy;
        out.mean.precision += s.metrics.precision;
        out.mean.recall += s.metrics.recall;
        out.mean.f1 += s.metrics.f1;
        out.pooled += s.confusion;
        out.collapsed_suites += s.collapse.collapsed ? 1 : 0;
    }
    const auto n = static_cast<double>(suites.size());
    out.mean.accuracy /= n;
    out.mean.precision /= n;
    out.mean.recall /= n;
    out.mean.f1 /= n;
    if (out.pooled.total() > 0) {
        out.pooled_collapse = detect_collapse(out.pooled.predicted_yes(), out.pooled.predicted_no());
    }
    return out;
}

SuiteResult evaluate_suite(const ModelParams& model, const std::string& name, const std::vector<Example>& examples,
                           std::string dataset_hash) {
    const auto preds = predict_dataset(model, examples);
    std::vector<Label> actual;
    actual.reserve(preds.indices.size());
    for (std::size_t i : preds.indices) {
        actual.push_back(examples[i].label);
    }
    const auto predicted = preds.labels();
    SuiteResult r;
    r.name = name;
    r.dataset_hash = std::move(dataset_hash);
    r.confusion = compute_confusion(predicted, actual);
    r.metrics = compute_metrics(r.confusion);
    r.collapse = detect_collapse(predicted);
    r.unpredictable = preds.unpredictable;
    return r;
}

EvalReport build_report(std::string model_hash, std::uint64_t seed, std::vector<SuiteResult> suites) {
    EvalReport r;
    r.model_hash = std::move(model_hash);
    r.seed = seed;
    r.suites = std::move(suites);
    r.overall = aggregate(r.suites);
    return r;
}

// ─── Emission ───────────────────────────────────────────────

std::string report_to_json(const EvalReport& report) {
    // nlohmann::json keeps object keys sorted, which gives the canonical order.
    nlohmann::json j;
    j["schema_version"] = report.schema_version;
    j["metadata"] = {{"model_hash", report.model_hash}, {"seed", report.seed}};
    j["suites"] = nlohmann::json::array();
    for (const auto& s : report.suites) {
        j["suites"].push_back({{"name", s.name},
                               {"dataset_hash", s.dataset_hash},
                               {"confusion", to_json(s.confusion)},
                               {"metrics", to_json(s.metrics)},
                               {"distribution", to_json(s.collapse)},
                               {"unpredictable", s.unpredictable}});
    }
    j["aggregate"] = {{"mean", to_json(report.overall.mean)},
                      {"pooled_confusion", to_json(report.overall.pooled)},
                      {"pooled_distribution", to_json(report.overall.pooled_collapse)},
                      {"collapsed_suites", report.overall.collapsed_suites}};
    return j.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text.begin(), text.end());
        const int version = j.at("schema_version").get<int>();
        if (version != kReportSchemaVersion) {
            throw ParseError("unsupported report schema version " + std::to_string(version));
        }
        EvalReport r;
        r.schema_version = version;
        r.model_hash = j.at("metadata").at("model_hash").get<std::string>();
        r.seed = j.at("metadata").at("seed").get<std::uint64_t>();
        for (const auto& s : j.at("suites")) {
            SuiteResult sr;
            sr.name = s.at("name").get<std::string>();
            sr.dataset_hash = s.at("dataset_hash").get<std::string>();
            sr.confusion = confusion_from(s.at("confusion"));
            sr.metrics = metrics_from(s.at("metrics"));
            sr.collapse = collapse_from(s.at("distribution"));
            sr.unpredictable = s.at("unpredictable").get<std::size_t>();
            r.suites.push_back(std::move(sr));
        }
        const auto& agg = j.at("aggregate");
        r.overall.mean = metrics_from(agg.at("mean"));
        r.overall.pooled = confusion_from(agg.at("pooled_confusion"));
        r.overall.pooled_collapse = collapse_from(agg.at("pooled_distribution"));
        r.overall.collapsed_suites = agg.at("collapsed_suites").get<std::size_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = "suite,tp,tn,fp,fn,accuracy,precision,recall,f1,yes_count,no_count,collapsed\n";
    auto row = [&](const std::string& name, const ConfusionMatrix& cm, const Metrics& m, const CollapseReport& c) {
        out += name + ',' + std::to_string(cm.tp) + ',' + std::to_string(cm.tn) + ',' + std::to_string(cm.fp) +
               ',' + std::to_string(cm.fn) + ',' + fixed6(m.accuracy) + ',' + fixed6(m.precision) + ',' +
               fixed6(m.recall) + ',' + fixed6(m.f1) + ',' + std::to_string(c.yes_count) + ',' +
               std::to_string(c.no_count) + ',' + (c.collapsed ? "true" : "false") + '\n';
    };
    for (const auto& s : report.suites) {
        row(s.name, s.confusion, s.metrics, s.collapse);
    }
    row("aggregate", report.overall.pooled, report.overall.mean, report.overall.pooled_collapse);
    return out;
}

void emit_report(const EvalReport& report, ReportFormat format, const std::filesystem::path& path) {
    write_file_atomic(path, format == ReportFormat::Json ? report_to_json(report) : report_to_csv(report));
}

} // namespace causalsem
