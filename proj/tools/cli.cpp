#include "cli.hpp"

#include "causalsem/dataset.hpp"
#include "causalsem/errors.hpp"
#include "causalsem/evaluation.hpp"
#include "causalsem/io.hpp"
#include "causalsem/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>

namespace causalsem::cli {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using KeyValues = std::vector<std::pair<std::string, std::string>>;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kDefaultSeed = 42;

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string fmt(std::size_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// key=value lines become --key=value arguments placed ahead of the user's own
// flags; options take the last value given, so explicit flags win.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    std::size_t sub = 0;
    while (sub < args.size() && !args[sub].empty() && args[sub][0] == '-') {
        ++sub;
    }
    if (sub >= args.size()) {
        return args;
    }
    std::optional<std::string> config;
    std::vector<std::string> rest;
    for (std::size_t i = sub + 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw ConfigError("--config needs a file path");
            }
            config = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> merged(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
    if (config) {
        std::istringstream in(read_file(*config));
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') {
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(*config + ":" + std::to_string(lineno) + ": expected key=value");
            }
            std::string key = trim(t.substr(0, eq));
            std::string value = trim(t.substr(eq + 1));
            if (key.rfind("--", 0) == 0) {
                key = key.substr(2);
            }
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
                value = value.substr(1, value.size() - 2);
            }
            if (key.empty()) {
                throw ConfigError(*config + ":" + std::to_string(lineno) + ": empty key");
            }
            merged.push_back("--" + key + "=" + value);
        }
    }
    merged.insert(merged.end(), rest.begin(), rest.end());
    return merged;
}

fs::path resolve_out(const std::string& flag, const std::string& default_name) {
    if (!flag.empty()) {
        return flag;
    }
    const char* dir = std::getenv(kOutDirEnv);
    return (dir && *dir) ? fs::path(dir) / default_name : fs::path(default_name);
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
    fs::path p = path;
    return p.replace_extension(suffix);
}

void print_config(std::ostream& out, const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
        out << k << '=' << v << '\n';
    }
}

Json hashes(const std::vector<fs::path>& paths) {
    Json arr = Json::array();
    for (const auto& p : paths) {
        arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    }
    return arr;
}

struct RunContext {
    std::string subcommand;
    std::vector<std::string> args;
    Clock::time_point start = Clock::now();
};

void write_manifest(const fs::path& path, const RunContext& ctx, const KeyValues& config, std::uint64_t seed,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    Json j;
    j["subcommand"] = ctx.subcommand;
    j["args"] = ctx.args;
    Json flags = Json::object();
    for (const auto& [k, v] : config) {
        flags[k] = v;
    }
    j["config"] = flags;
    j["seed"] = seed;
    j["inputs"] = hashes(inputs);
    j["outputs"] = hashes(outputs);
    j["artifact_version"] = kArtifactVersion;
    j["vocabulary_fingerprint"] = hex64(vocabulary_fingerprint());
    j["duration_seconds"] = std::chrono::duration<double>(Clock::now() - ctx.start).count();
    write_file_atomic(path, j.dump(2) + "\n");
}

// ─── gen ────────────────────────────────────────────────────

struct GenOptions {
    std::string task = "transitivity";
    std::string suite = "train";
    std::size_t count = 1000;
    std::uint64_t seed = kDefaultSeed;
    std::string out;
    std::optional<std::int64_t> size_min, size_max, name_min, name_max, z_min, z_max;
    std::optional<double> density_min, density_max;
    std::string p_flip;
    std::optional<bool> reverse_edges, shuffle_sentences, balance_labels;
    bool show_config = false;
};

void add_gen(CLI::App& app, GenOptions& o) {
    auto* sub = app.add_subcommand("gen", "Generate a validated JSONL dataset");
    sub->add_option("--task", o.task, "transitivity or dsep")
        ->check(CLI::IsMember({"transitivity", "dsep"}))
        ->capture_default_str();
    sub->add_option("--suite", o.suite, "train, length, branching, reversed, shuffled, long-names, adversarial")
        ->check(CLI::IsMember({"train", "length", "branching", "reversed", "shuffled", "long-names", "adversarial"}))
        ->capture_default_str();
    sub->add_option("--count", o.count, "Number of examples")->capture_default_str();
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--out", o.out, "Output JSONL path");
    sub->add_option("--size-min", o.size_min, "Minimum chain length or node count");
    sub->add_option("--size-max", o.size_max, "Maximum chain length or node count");
    sub->add_option("--name-min", o.name_min, "Minimum variable name length");
    sub->add_option("--name-max", o.name_max, "Maximum variable name length");
    sub->add_option("--density-min", o.density_min, "Minimum DAG edge density");
    sub->add_option("--density-max", o.density_max, "Maximum DAG edge density");
    sub->add_option("--z-min", o.z_min, "Minimum conditioning set size");
    sub->add_option("--z-max", o.z_max, "Maximum conditioning set size");
    sub->add_option("--p-flip", o.p_flip, "Comma-separated edge flip probabilities for chains");
    sub->add_option("--reverse-edges", o.reverse_edges, "Reverse every edge (true/false)");
    sub->add_option("--shuffle-sentences", o.shuffle_sentences, "Permute premise sentences (true/false)");
    sub->add_option("--balance-labels", o.balance_labels, "Balance transitivity labels (true/false)");
    sub->add_flag("--show-config", o.show_config, "Print the effective configuration and exit");
}

GenerationSpec resolve_gen(const GenOptions& o) {
    GenerationSpec spec = GenerationSpec::defaults(parse_task(o.task), parse_suite(o.suite), o.count, o.seed);
    auto& p = spec.parameters;
    auto to_int = [](std::int64_t v) { return static_cast<int>(v); };
    if (o.size_min) p.size.min = to_int(*o.size_min);
    if (o.size_max) p.size.max = to_int(*o.size_max);
    if (o.name_min) p.name_length.min = to_int(*o.name_min);
    if (o.name_max) p.name_length.max = to_int(*o.name_max);
    if (o.z_min) p.z_size.min = to_int(*o.z_min);
    if (o.z_max) p.z_size.max = to_int(*o.z_max);
    if (o.density_min) p.density.min = *o.density_min;
    if (o.density_max) p.density.max = *o.density_max;
    if (!o.p_flip.empty()) {
        p.p_flip_choices.clear();
        for (const auto& item : split_list(o.p_flip)) {
            try {
                p.p_flip_choices.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigError("--p-flip: not a number: " + item);
            }
        }
    }
    if (o.reverse_edges) p.reverse_edges = *o.reverse_edges;
    if (o.shuffle_sentences) p.shuffle_sentences = *o.shuffle_sentences;
    if (o.balance_labels) p.balance_labels = *o.balance_labels;
    spec.validate();
    return spec;
}

KeyValues gen_config(const GenerationSpec& spec, const fs::path& out) {
    const auto& p = spec.parameters;
    std::string flips;
    for (double v : p.p_flip_choices) {
        flips += (flips.empty() ? "" : ",") + fmt(v);
    }
    return {{"task", std::string(to_string(spec.task))},
            {"suite", std::string(to_string(spec.suite))},
            {"count", fmt(spec.count)},
            {"seed", fmt(spec.seed)},
            {"out", out.string()},
            {"size-min", std::to_string(p.size.min)},
            {"size-max", std::to_string(p.size.max)},
            {"name-min", std::to_string(p.name_length.min)},
            {"name-max", std::to_string(p.name_length.max)},
            {"density-min", fmt(p.density.min)},
            {"density-max", fmt(p.density.max)},
            {"z-min", std::to_string(p.z_size.min)},
            {"z-max", std::to_string(p.z_size.max)},
            {"p-flip", flips},
            {"reverse-edges", fmt(p.reverse_edges)},
            {"shuffle-sentences", fmt(p.shuffle_sentences)},
            {"balance-labels", fmt(p.balance_labels)}};
}

int cmd_gen(const GenOptions& o, const RunContext& ctx, std::ostream& out, std::ostream& err) {
    const GenerationSpec spec = resolve_gen(o);
    const fs::path path =
        resolve_out(o.out, std::string(to_string(spec.task)) + "-" + std::string(to_string(spec.suite)) + ".jsonl");
    const KeyValues config = gen_config(spec, path);
    if (o.show_config) {
        print_config(out, config);
        return kExitOk;
    }
    const fs::path report_path = sibling(path, ".report.json");

    Json report;
    report["task"] = to_string(spec.task);
    report["suite"] = to_string(spec.suite);
    report["count"] = spec.count;
    report["seed"] = spec.seed;

    std::vector<Example> examples;
    try {
        if (spec.suite == Suite::Adversarial) {
            auto adv = generate_adversarial(AdversarialSpec{spec.count, spec.seed, spec.parameters.name_length});
            examples = std::move(adv.examples);
            Json mix = Json::object();
            for (auto kind : {AdversarialKind::IrrelevantNodes, AdversarialKind::BrokenChain,
                              AdversarialKind::ExtendedTransitivity}) {
                mix[std::string(to_string(kind))] =
                    static_cast<std::size_t>(std::count(adv.kinds.begin(), adv.kinds.end(), kind));
            }
            report["mix"] = mix;
            report["validation"] = to_json(adv.report);
        } else {
            auto suite = generate_suite(spec);
            examples = std::move(suite.examples);
            report["validation"] = to_json(suite.report);
        }
    } catch (const SuiteGenerationError& e) {
        report["validation"] = to_json(e.partial());
        report["error"] = e.what();
        write_file_atomic(report_path, report.dump(2) + "\n");
        err << "gen: " << e.what() << " (partial report: " << report_path.string() << ")\n";
        return kExitValidation;
    }
    const auto yes = static_cast<std::size_t>(
        std::count_if(examples.begin(), examples.end(), [](const Example& e) { return e.label == Label::Yes; }));
    report["labels"] = {{"Yes", yes}, {"No", examples.size() - yes}};

    write_jsonl(examples, path);
    write_file_atomic(report_path, report.dump(2) + "\n");
    write_manifest(sibling(path, ".manifest.json"), ctx, config, spec.seed, {}, {path, report_path});
    out << "wrote " << examples.size() << " examples to " << path.string() << " (acceptance rate "
        << fmt(report["validation"]["acceptance_rate"].get<double>()) << ")\n";
    return kExitOk;
}

// ─── train ──────────────────────────────────────────────────

struct TrainOptions {
    std::string data;
    std::string probe;
    std::string out;
    std::string preset = "toy";
    std::string semantic = "on";
    std::string convention = "oracle";
    std::optional<std::size_t> epochs, batch_size, warmup, d_embed, d_hidden, max_seq_len;
    std::optional<double> lr, weight_decay, lambda_start, lambda_end;
    std::uint64_t seed = kDefaultSeed;
    bool show_config = false;
};

void add_train(CLI::App& app, TrainOptions& o) {
    auto* sub = app.add_subcommand("train", "Train the toy classifier");
    sub->add_option("--data", o.data, "Training JSONL");
    sub->add_option("--probe", o.probe, "Held-out JSONL scored after every epoch");
    sub->add_option("--out", o.out, "Output model path");
    sub->add_option("--preset", o.preset, "toy or finetune")->check(CLI::IsMember({"toy", "finetune"}))->capture_default_str();
    sub->add_option("--semantic", o.semantic, "on or off")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
    sub->add_option("--convention", o.convention, "oracle or inverted")
        ->check(CLI::IsMember({"oracle", "inverted"}))
        ->capture_default_str();
    sub->add_option("--lambda-start", o.lambda_start, "Semantic weight at the first step");
    sub->add_option("--lambda-end", o.lambda_end, "Semantic weight at the last step");
    sub->add_option("--epochs", o.epochs, "Training epochs");
    sub->add_option("--batch-size", o.batch_size, "Examples per optimizer step");
    sub->add_option("--lr", o.lr, "Peak learning rate");
    sub->add_option("--weight-decay", o.weight_decay, "Decoupled weight decay");
    sub->add_option("--warmup", o.warmup, "Linear warmup steps");
    sub->add_option("--d-embed", o.d_embed, "Embedding width");
    sub->add_option("--d-hidden", o.d_hidden, "Hidden width");
    sub->add_option("--max-seq-len", o.max_seq_len, "Token limit per example");
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_flag("--show-config", o.show_config, "Print the effective configuration and exit");
}

TrainConfig resolve_train(const TrainOptions& o) {
    TrainConfig c = o.preset == "finetune" ? TrainConfig::finetune_preset() : TrainConfig{};
    c.seed = o.seed;
    c.semantic_enabled = o.semantic == "on";
    c.convention = o.convention == "inverted" ? ConsistencyConvention::Inverted : ConsistencyConvention::OracleAligned;
    if (o.epochs) c.epochs = *o.epochs;
    if (o.batch_size) c.batch_size = *o.batch_size;
    if (o.warmup) c.warmup_steps = *o.warmup;
    if (o.d_embed) c.d_embed = *o.d_embed;
    if (o.d_hidden) c.d_hidden = *o.d_hidden;
    if (o.max_seq_len) c.max_seq_len = *o.max_seq_len;
    if (o.lr) c.learning_rate = *o.lr;
    if (o.weight_decay) c.weight_decay = *o.weight_decay;
    if (o.lambda_start) c.lambda_start = *o.lambda_start;
    if (o.lambda_end) c.lambda_end = *o.lambda_end;
    c.validate();
    return c;
}

KeyValues train_config(const TrainOptions& o, const TrainConfig& c, const fs::path& out) {
    return {{"data", o.data},
            {"probe", o.probe},
            {"out", out.string()},
            {"preset", o.preset},
            {"semantic", c.semantic_enabled ? "on" : "off"},
            {"convention", c.convention == ConsistencyConvention::Inverted ? "inverted" : "oracle"},
            {"lambda-start", fmt(c.lambda_start)},
            {"lambda-end", fmt(c.lambda_end)},
            {"epochs", fmt(c.epochs)},
            {"batch-size", fmt(c.batch_size)},
            {"lr", fmt(c.learning_rate)},
            {"weight-decay", fmt(c.weight_decay)},
            {"warmup", fmt(c.warmup_steps)},
            {"d-embed", fmt(c.d_embed)},
            {"d-hidden", fmt(c.d_hidden)},
            {"max-seq-len", fmt(c.max_seq_len)},
            {"seed", fmt(c.seed)}};
}

int cmd_train(const TrainOptions& o, const RunContext& ctx, std::ostream& out, std::ostream& err) {
    const TrainConfig config = resolve_train(o);
    const fs::path path = resolve_out(o.out, "model.bin");
    const KeyValues kv = train_config(o, config, path);
    if (o.show_config) {
        print_config(out, kv);
        return kExitOk;
    }
    if (o.data.empty()) {
        throw ConfigError("train needs --data");
    }
    const auto data = read_jsonl(o.data);
    std::vector<Example> probe;
    std::vector<fs::path> inputs{o.data};
    if (!o.probe.empty()) {
        probe = read_jsonl(o.probe);
        inputs.emplace_back(o.probe);
    }
    const auto result = train(data, config, probe);

    const fs::path log_path = sibling(path, ".log.csv");
    const fs::path summary_path = sibling(path, ".summary.json");
    save_model(result.model, path);
    write_file_atomic(log_path, result.log.to_csv());
    write_file_atomic(summary_path, result.log.summary(config).dump(2) + "\n");
    write_manifest(sibling(path, ".manifest.json"), ctx, kv, config.seed, inputs, {path, log_path, summary_path});

    out << "trained " << result.log.steps.size() << " steps on " << data.size() << " examples; final loss "
        << fmt(result.log.steps.back().total);
    const auto& last = result.log.epochs.back();
    if (last.probe) {
        out << "; probe bias " << fmt(last.probe->bias_fraction) << (last.probe->collapsed ? " (collapsed)" : "");
    }
    out << "\n";
    if (result.log.parse_fallbacks > 0) {
        err << "train: " << result.log.parse_fallbacks << " samples fell back to cross-entropy only\n";
    }
    return kExitOk;
}

// ─── eval ───────────────────────────────────────────────────

struct EvalOptions {
    std::string model;
    std::string data;
    std::string out;
    std::string format = "json";
    std::uint64_t seed = kDefaultSeed;
    bool show_config = false;
};

void add_eval(CLI::App& app, EvalOptions& o) {
    auto* sub = app.add_subcommand("eval", "Evaluate a model on one or more suites");
    sub->add_option("--model", o.model, "Model file");
    sub->add_option("--data", o.data, "Comma-separated suite JSONL files");
    sub->add_option("--out", o.out, "Report path");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    sub->add_option("--seed", o.seed, "Seed recorded in the report metadata")->capture_default_str();
    sub->add_flag("--show-config", o.show_config, "Print the effective configuration and exit");
}

// Datasets produced by gen carry the tokenizer fingerprint in their manifest.
void check_dataset_vocabulary(const fs::path& data) {
    const fs::path manifest = sibling(data, ".manifest.json");
    if (!fs::exists(manifest)) {
        return;
    }
    const auto j = nlohmann::json::parse(read_file(manifest), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("vocabulary_fingerprint")) {
        return;
    }
    const auto recorded = j["vocabulary_fingerprint"].get<std::string>();
    if (recorded != hex64(vocabulary_fingerprint())) {
        throw ModelFormatError("incompatible vocabulary: " + data.string() + " was generated with vocabulary " +
                               recorded + ", model uses " + hex64(vocabulary_fingerprint()));
    }
}

int cmd_eval(const EvalOptions& o, const RunContext& ctx, std::ostream& out, std::ostream&) {
    const ReportFormat format = o.format == "csv" ? ReportFormat::Csv : ReportFormat::Json;
    const fs::path path = resolve_out(o.out, format == ReportFormat::Csv ? "report.csv" : "report.json");
    const KeyValues kv{{"model", o.model}, {"data", o.data}, {"out", path.string()}, {"format", o.format},
                       {"seed", fmt(o.seed)}};
    if (o.show_config) {
        print_config(out, kv);
        return kExitOk;
    }
    if (o.model.empty() || o.data.empty()) {
        throw ConfigError("eval needs --model and --data");
    }
    ModelParams model;
    try {
        model = load_model(o.model);
    } catch (const ModelFormatError& e) {
        throw ModelFormatError("incompatible model " + o.model + ": " + e.what());
    }
    std::vector<fs::path> inputs{o.model};
    std::vector<SuiteResult> suites;
    for (const auto& item : split_list(o.data)) {
        const fs::path data(item);
        check_dataset_vocabulary(data);
        const auto examples = read_jsonl(data);
        if (examples.empty()) {
            throw RecordError(1, data.string() + " contains no examples");
        }
        suites.push_back(evaluate_suite(model, data.stem().string(), examples, sha256_file(data)));
        inputs.push_back(data);
    }
    const auto report = build_report(sha256_file(o.model), o.seed, std::move(suites));
    emit_report(report, format, path);
    write_manifest(sibling(path, ".manifest.json"), ctx, kv, o.seed, inputs, {path});

    for (const auto& s : report.suites) {
        out << s.name << ": accuracy " << fmt(s.metrics.accuracy) << ", f1 " << fmt(s.metrics.f1)
            << (s.collapse.collapsed ? ", collapsed" : "") << "\n";
    }
    out << "aggregate: accuracy " << fmt(report.overall.mean.accuracy) << ", f1 " << fmt(report.overall.mean.f1)
        << ", collapsed suites " << report.overall.collapsed_suites << "/" << report.suites.size() << "\n";
    return kExitOk;
}

// ─── validate ───────────────────────────────────────────────

struct ValidateOptions {
    std::string in;
    std::string report;
    bool show_config = false;
};

void add_validate(CLI::App& app, ValidateOptions& o) {
    auto* sub = app.add_subcommand("validate", "Re-validate every record of a JSONL dataset");
    sub->add_option("--in", o.in, "Dataset JSONL");
    sub->add_option("--report", o.report, "Also write the validation report here");
    sub->add_flag("--show-config", o.show_config, "Print the effective configuration and exit");
}

int cmd_validate(const ValidateOptions& o, const RunContext& ctx, std::ostream& out, std::ostream& err) {
    const KeyValues kv{{"in", o.in}, {"report", o.report}};
    if (o.show_config) {
        print_config(out, kv);
        return kExitOk;
    }
    if (o.in.empty()) {
        throw ConfigError("validate needs --in");
    }
    const auto report = validate_file(o.in);
    const std::string text = to_json(report).dump(2) + "\n";
    out << text;
    if (!o.report.empty()) {
        write_file_atomic(o.report, text);
        write_manifest(sibling(o.report, ".manifest.json"), ctx, kv, 0, {o.in}, {o.report});
    }
    if (report.accepted == 0 && report.total_rejections() == 0) {
        err << "validate: " << o.in << " contains no records\n";
        return kExitValidation;
    }
    if (report.total_rejections() > 0) {
        for (const auto& f : report.failures) {
            err << o.in << ":" << f.line << ": " << to_string(f.reason) << ": " << f.detail << "\n";
        }
        return kExitValidation;
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Causal-reasoning datasets, semantic-loss training and collapse diagnostics", "causalsem"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.set_version_flag("--version", kArtifactVersion);

    GenOptions gen;
    TrainOptions trn;
    EvalOptions evl;
    ValidateOptions val;
    add_gen(app, gen);
    add_train(app, trn);
    add_eval(app, evl);
    add_validate(app, val);

    RunContext ctx;
    try {
        ctx.args = merge_config(args);
        std::vector<std::string> reversed(ctx.args.rbegin(), ctx.args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        const int code = app.exit(e, o, r);
        out << o.str();
        err << r.str();
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    const auto* sub = app.get_subcommands().front();
    ctx.subcommand = sub->get_name();
    try {
        if (ctx.subcommand == "gen") return cmd_gen(gen, ctx, out, err);
        if (ctx.subcommand == "train") return cmd_train(trn, ctx, out, err);
        if (ctx.subcommand == "eval") return cmd_eval(evl, ctx, out, err);
        return cmd_validate(val, ctx, out, err);
    } catch (const ConfigError& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const RecordError& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const ModelFormatError& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const GenerationError& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << ctx.subcommand << ": " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace causalsem::cli
