#include "doctest.h"

#include "causalsem/errors.hpp"
#include "causalsem/evaluation.hpp"
#include "causalsem/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <filesystem>

using namespace causalsem;

namespace {

SuiteResult suite_from(const std::string& name, const ConfusionMatrix& cm) {
    SuiteResult s;
    s.name = name;
    s.confusion = cm;
    s.metrics = compute_metrics(cm);
    s.collapse = detect_collapse(cm.predicted_yes(), cm.predicted_no());
    return s;
}

std::vector<Label> repeat(Label label, std::size_t n) { return std::vector<Label>(n, label); }

} // namespace

TEST_CASE("confusion matrix counting") {
    const std::vector<Label> predicted{Label::Yes, Label::Yes, Label::No, Label::No, Label::Yes};
    const std::vector<Label> actual{Label::Yes, Label::No, Label::No, Label::Yes, Label::Yes};
    const auto cm = compute_confusion(predicted, actual);
    CHECK(cm == ConfusionMatrix{2, 1, 1, 1});
    CHECK(cm.total() == 5);
    CHECK_THROWS_AS(compute_confusion(predicted, std::vector<Label>{Label::Yes}), Error);
}

TEST_CASE("metrics for an always-Yes predictor on a 70.8% Yes set") {
    const auto m = compute_metrics(ConfusionMatrix{708, 0, 292, 0});
    CHECK(m.accuracy == doctest::Approx(0.708).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(0.708).epsilon(1e-12));
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == doctest::Approx(0.829).epsilon(0.001));
}

TEST_CASE("metrics for a mixed predictor") {
    const auto m = compute_metrics(ConfusionMatrix{247, 183, 109, 461});
    CHECK(m.accuracy == doctest::Approx(0.430).epsilon(1e-12));
    CHECK(m.precision == doctest::Approx(247.0 / 356.0));
    CHECK(m.recall == doctest::Approx(247.0 / 708.0));
    CHECK(m.f1 == doctest::Approx(2.0 * 247.0 / (2.0 * 247.0 + 109.0 + 461.0)));
}

TEST_CASE("degenerate metrics use zero for empty denominators") {
    const auto m = compute_metrics(ConfusionMatrix{0, 50, 0, 0});
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
    CHECK_THROWS_AS(compute_metrics(ConfusionMatrix{}), Error);
}

TEST_CASE("collapse detection") {
    const auto all_yes = detect_collapse(repeat(Label::Yes, 1000));
    CHECK(all_yes.collapsed);
    CHECK(all_yes.bias_fraction == 1.0);
    CHECK(all_yes.dominant == Label::Yes);

    const auto mostly_no = detect_collapse(40, 960);
    CHECK(mostly_no.collapsed);
    CHECK(mostly_no.dominant == Label::No);
    CHECK(mostly_no.bias_fraction == doctest::Approx(0.96));

    const auto balanced = detect_collapse(600, 400);
    CHECK_FALSE(balanced.collapsed);
    CHECK(balanced.dominant == Label::Yes);

    const auto boundary = detect_collapse(9500, 500);
    CHECK(boundary.bias_fraction == 0.95);
    CHECK_FALSE(boundary.collapsed);
    CHECK(detect_collapse(9501, 499).collapsed);

    const auto tie = detect_collapse(5, 5);
    CHECK_FALSE(tie.dominant.has_value());
    CHECK_FALSE(tie.collapsed);

    CHECK_THROWS_AS(detect_collapse(0, 0), Error);
    CHECK_THROWS_AS(detect_collapse(std::vector<Label>{}), Error);
}

TEST_CASE("unweighted mean over five transitivity suites") {
    // Accuracies 64.6, 97.9, 56.9, 69.7 and 62.8 percent on 1000 examples each.
    const std::vector<std::size_t> correct{646, 979, 569, 697, 628};
    std::vector<SuiteResult> suites;
    for (std::size_t i = 0; i < correct.size(); ++i) {
        suites.push_back(suite_from("s" + std::to_string(i), ConfusionMatrix{correct[i], 0, 1000 - correct[i], 0}));
    }
    const auto agg = aggregate(suites);
    CHECK(agg.mean.accuracy * 100.0 == doctest::Approx(70.38).epsilon(1e-9));
    CHECK(agg.pooled.total() == 5000);
    CHECK(agg.pooled_collapse.collapsed);
    CHECK(agg.collapsed_suites == 5);
    CHECK(aggregate(std::vector<SuiteResult>{}) == AggregateResult{});
}

TEST_CASE("suite evaluation counts untokenizable examples") {
    const auto model = init_model(ModelShape{}, 1);
    const std::vector<Example> data{{"A causes B.", "Does A cause B?", Label::Yes},
                                    {"A causes B!", "Does A cause B?", Label::Yes},
                                    {"A causes B.", "Does B cause A?", Label::No}};
    const auto preds = predict_dataset(model, data);
    CHECK(preds.unpredictable == 1);
    CHECK(preds.indices == std::vector<std::size_t>{0, 2});
    const auto s = evaluate_suite(model, "mini", data, "abc");
    CHECK(s.unpredictable == 1);
    CHECK(s.confusion.total() == 2);
    CHECK(s.dataset_hash == "abc");
}

TEST_CASE("report serialization") {
    std::vector<SuiteResult> suites;
    suites.push_back(suite_from("train", ConfusionMatrix{400, 300, 200, 100}));
    suites.push_back(suite_from("length", ConfusionMatrix{708, 0, 292, 0}));
    suites.push_back(suite_from("branching", ConfusionMatrix{10, 900, 5, 85}));
    suites.push_back(suite_from("reversed", ConfusionMatrix{247, 183, 109, 461}));
    suites.push_back(suite_from("shuffled", ConfusionMatrix{500, 500, 0, 0}));
    suites[0].dataset_hash = "00ff";
    const auto report = build_report("deadbeef", 42, suites);
    CHECK(report.overall.collapsed_suites == 2);

    SUBCASE("JSON round trip") {
        const auto text = report_to_json(report);
        CHECK(report_from_json(text) == report);
        const auto j = nlohmann::json::parse(text);
        CHECK(j["schema_version"] == kReportSchemaVersion);
        CHECK(j["metadata"]["model_hash"] == "deadbeef");
        CHECK(j["suites"].size() == 5);
        CHECK(j["suites"][1]["distribution"]["collapsed"] == true);
        CHECK(j["suites"][1]["distribution"]["dominant_class"] == "Yes");
        CHECK(j["aggregate"]["collapsed_suites"] == 2);
        CHECK_THROWS_AS(report_from_json("{\"schema_version\": 1}"), ParseError);
        CHECK_THROWS_AS(report_from_json("not json"), ParseError);
    }
    SUBCASE("CSV has one row per suite plus the aggregate") {
        const auto csv = report_to_csv(report);
        CHECK(csv.rfind("suite,tp,tn,fp,fn,accuracy,precision,recall,f1,yes_count,no_count,collapsed\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
        CHECK(csv.find("\nlength,708,0,292,0,0.708000,0.708000,1.000000,") != std::string::npos);
        CHECK(csv.find("\naggregate,") != std::string::npos);
    }
    SUBCASE("emit_report writes the chosen format") {
        const auto dir = std::filesystem::temp_directory_path() / "causalsem_test_reports";
        emit_report(report, ReportFormat::Csv, dir / "r.csv");
        emit_report(report, ReportFormat::Json, dir / "r.json");
        CHECK(read_file(dir / "r.csv") == report_to_csv(report));
        CHECK(report_from_json(read_file(dir / "r.json")) == report);
        std::filesystem::remove_all(dir);
    }
}
