#include "commands.hpp"

#include "stepwise/datagen.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/eval.hpp"
#include "stepwise/loss_checks.hpp"
#include "stepwise/trace_codec.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

namespace stepwise::cli {

namespace {

using nlohmann::json;

#ifdef STEPWISE_FAULTY_SIGMOID
// Test build only: a sigmoid that is off by a few percent.
double broken_sigmoid(double x) noexcept { return 0.97 * losses::sigmoid(x); }
double broken_log_sigmoid(double x) noexcept { return std::log(broken_sigmoid(x)); }
constexpr losses::Kernels kKernels{&broken_log_sigmoid, &broken_sigmoid};
#else
constexpr losses::Kernels kKernels{};
#endif

void require_file(const std::filesystem::path& p, const char* what) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) throw IoError(fmt::format("{} not found: {}", what, p.string()));
}

template <typename T>
T get_as(const json& doc, const char* key, const std::string& where) {
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("{}: '{}' has the wrong type", where, key));
    }
}

std::size_t get_count(const json& doc, const char* key, const std::string& where) {
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw ConfigError(fmt::format("{}: '{}' must be a positive integer", where, key));
    }
    return v.get<std::size_t>();
}

std::string created_at(bool mock) {
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        try {
            return datagen::iso8601_utc(std::stoll(epoch));
        } catch (const std::exception&) {
            throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
        }
    }
    if (mock) return datagen::iso8601_utc(0);
    auto now = std::chrono::system_clock::now().time_since_epoch();
    return datagen::iso8601_utc(std::chrono::duration_cast<std::chrono::seconds>(now).count());
}

} // namespace

FileConfig load_config(const std::optional<std::filesystem::path>& path) {
    FileConfig cfg;
    if (!path) return cfg;
    require_file(*path, "config file");
    std::ifstream in(*path);
    json doc = json::parse(in, nullptr, false);
    const std::string where = path->string();
    if (doc.is_discarded() || !doc.is_object()) throw ConfigError(where + ": not a JSON object");

    static const std::set<std::string> known = {
        "endpoint_url",     "model_name",     "temperature",      "max_retries", "parallelism",
        "timeout_seconds",  "credential_env", "student_prompt",   "teacher_prompt",
        "max_subquestions", "max_states",     "dpo_beta"};
    if (doc.contains("credential")) {
        throw ConfigError(where + ": credentials are read from the environment only (see credential_env)");
    }
    for (const auto& [key, _] : doc.items()) {
        if (!known.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
    }

    const auto base = path->parent_path();
    auto rel = [&](const std::string& p) {
        std::filesystem::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };

    if (doc.contains("endpoint_url")) cfg.generator.endpoint_url = get_as<std::string>(doc, "endpoint_url", where);
    if (doc.contains("model_name")) cfg.generator.model_name = get_as<std::string>(doc, "model_name", where);
    if (doc.contains("temperature")) cfg.generator.temperature = get_as<double>(doc, "temperature", where);
    if (doc.contains("max_retries")) cfg.generator.max_retries = get_count(doc, "max_retries", where);
    if (doc.contains("parallelism")) cfg.generator.parallelism = get_count(doc, "parallelism", where);
    if (doc.contains("timeout_seconds")) {
        cfg.generator.timeout = std::chrono::seconds(get_count(doc, "timeout_seconds", where));
    }
    if (doc.contains("credential_env")) cfg.credential_env = get_as<std::string>(doc, "credential_env", where);
    if (doc.contains("student_prompt")) cfg.student_prompt = rel(get_as<std::string>(doc, "student_prompt", where));
    if (doc.contains("teacher_prompt")) cfg.teacher_prompt = rel(get_as<std::string>(doc, "teacher_prompt", where));
    if (doc.contains("max_subquestions")) cfg.max_subquestions = get_count(doc, "max_subquestions", where);
    if (doc.contains("max_states")) cfg.max_states = get_count(doc, "max_states", where);
    if (doc.contains("dpo_beta")) cfg.dpo_beta = get_as<double>(doc, "dpo_beta", where);

    cfg.generator.check();
    try {
        cfg.rules(true).check();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (!(cfg.dpo_beta > 0.0)) throw ConfigError(where + ": dpo_beta must be positive");
    if (!cfg.student_prompt.empty()) require_file(cfg.student_prompt, "student prompt");
    if (!cfg.teacher_prompt.empty()) require_file(cfg.teacher_prompt, "teacher prompt");
    return cfg;
}

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<Trace> traces;
    TransitionRules rules;
    try {
        auto cfg = load_config(args.config);
        rules = cfg.rules(args.stage != 1);
        require_file(args.traces, "traces file");
        auto rows = read_jsonl(args.traces);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            try {
                traces.push_back(from_record(rows[i]));
            } catch (const SchemaError& e) {
                throw SchemaError(fmt::format("{} record {}: {}", args.traces.string(), i + 1, e.what()));
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    std::size_t valid = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        auto verdict = validate(traces[i], rules);
        if (verdict.valid) {
            ++valid;
            out << fmt::format("trace {}: valid\n", i + 1);
            continue;
        }
        out << fmt::format("trace {}: invalid\n", i + 1);
        for (const auto& v : verdict.violations) {
            out << fmt::format("  state {}: {}: {}\n", v.state_index, to_string(v.code), v.message);
        }
    }
    out << fmt::format("{}/{} valid (stage {} rules)\n", valid, traces.size(), args.stage == 1 ? "I" : "II");
    return valid == traces.size() ? kOk : kSemanticFailure;
}

int cmd_build(const BuildArgs& args, std::ostream& out, std::ostream& err) {
    try {
        auto cfg = load_config(args.config);
        if (args.endpoint) cfg.generator.endpoint_url = *args.endpoint;
        if (args.model) cfg.generator.model_name = *args.model;
        require_file(args.problems, "problems file");
        if (args.mock) require_file(*args.mock, "mock script");

        std::unique_ptr<GeneratorClient> client;
        std::string generator_name = cfg.generator.model_name;
        if (args.mock) {
            client = std::make_unique<ScriptedClient>(ScriptedClient::read_script(*args.mock));
            if (generator_name.empty()) generator_name = "scripted-mock";
        } else {
            const char* key = std::getenv(cfg.credential_env.c_str());
            if (!key || !*key) {
                err << fmt::format("error: no generator credential. Export ${} with the API key for the "
                                   "endpoint, or pass --mock <script.jsonl> to run offline.\n",
                                   cfg.credential_env);
                return kUsageError;
            }
            if (cfg.generator.endpoint_url.empty()) {
                err << "error: no generator endpoint. Set endpoint_url in --config or pass --endpoint.\n";
                return kUsageError;
            }
            if (cfg.generator.model_name.empty()) {
                err << "error: no model name. Set model_name in --config or pass --model.\n";
                return kUsageError;
            }
            cfg.generator.credential = key;
            client = std::make_unique<HttpChatClient>(cfg.generator);
        }

        auto problems = datagen::load_problems(args.problems);
        auto options =
            datagen::RunOptions::from(cfg.generator, PromptTemplates::load(cfg.student_prompt, cfg.teacher_prompt));
        auto stamp = created_at(args.mock.has_value());

        auto hyper = datagen::default_hyperparameters();
        hyper["dpo_beta"] = cfg.dpo_beta;
        auto result = datagen::build_datasets(problems, *client, cfg.rules(false), cfg.rules(true), options,
                                              args.out_dir, generator_name, stamp, hyper);
        const auto& manifest = result.manifest;
        const auto& cases = result.cases;
        out << fmt::format("right {}, pairs {}, failed {}\n", manifest.right_count, manifest.pair_count,
                           manifest.failed_count);
        for (const auto& c : cases) {
            if (const auto* f = std::get_if<datagen::Failed>(&c.outcome)) {
                out << fmt::format("  failed {}: {}\n", c.problem.id, f->cause);
            }
        }
        out << fmt::format("wrote {}\n", args.out_dir.string());
        return kOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
}

int cmd_losses_check(std::ostream& out, std::ostream&) {
    auto start = std::chrono::steady_clock::now();
    auto results = losses::run_loss_checks(kKernels);
    std::size_t failed = 0;
    for (const auto& r : results) {
        if (r.passed) {
            out << "PASS " << r.name << '\n';
        } else {
            ++failed;
            out << "FAIL " << r.name << (r.detail.empty() ? "" : ": " + r.detail) << '\n';
        }
    }
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    out << fmt::format("{}/{} loss checks passed in {} ms\n", results.size() - failed, results.size(), ms.count());
    return failed == 0 ? kOk : kSemanticFailure;
}

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
    std::vector<eval::EvalRecord> records;
    try {
        require_file(args.predictions, "predictions file");
        require_file(args.gold, "gold file");
        auto predictions = eval::load_predictions(args.predictions);
        auto gold = eval::load_gold(args.gold);
        records = eval::build_records(predictions, gold, args.n);
    } catch (const eval::InsufficientSamples& e) {
        err << "error: " << e.what() << '\n';
        return kSemanticFailure;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }
    if (records.empty()) {
        err << "error: no predictions to score\n";
        return kUsageError;
    }

    auto t = eval::tally(records);
    out << fmt::format("accuracy {:.2f}% ({}/{} correct, maj@{})\n", t.accuracy() * 100.0, t.correct, t.total,
                       args.n);
    auto report = eval::render_report({{args.run_name, t.accuracy()}}, eval::ReferenceTable::published());
    if (args.report) {
        std::ofstream f(*args.report, std::ios::binary | std::ios::trunc);
        if (!f || !(f << report)) {
            err << "error: cannot write report " << args.report->string() << '\n';
            return kUsageError;
        }
    } else {
        out << '\n' << report;
    }
    return kOk;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"State-transition reasoning toolkit: trace validation, dataset construction, "
                 "loss self-checks and maj@n scoring"};
    app.require_subcommand(1);

    std::optional<std::filesystem::path> config;
    app.add_option("--config", config, "JSON config file")->check(CLI::ExistingFile);

    ValidateArgs va;
    auto* validate_cmd = app.add_subcommand("validate", "Validate a JSONL file of trace records");
    validate_cmd->add_option("traces", va.traces, "JSONL of trace records")->required();
    validate_cmd->add_option("--stage", va.stage, "1 = student action set, 2 = full action set")
        ->check(CLI::IsMember({1, 2}));

    BuildArgs ba;
    auto* build_cmd = app.add_subcommand("build", "Run both construction stages and emit datasets");
    build_cmd->add_option("--problems", ba.problems, "JSONL of {id, question, reference_answer}")->required();
    build_cmd->add_option("--out", ba.out_dir, "Output directory")->required();
    auto* mock = build_cmd->add_option("--mock", ba.mock, "Scripted generator responses (offline)");
    auto* endpoint = build_cmd->add_option("--endpoint", ba.endpoint, "Chat-completion endpoint URL");
    build_cmd->add_option("--model", ba.model, "Generator model name");
    mock->excludes(endpoint);

    auto* losses_cmd = app.add_subcommand("losses-check", "Run the NTP/DPO analytic and gradient checks");

    ScoreArgs sa;
    auto* score_cmd = app.add_subcommand("score", "maj@n accuracy against gold answers");
    score_cmd->add_option("--predictions", sa.predictions, "JSONL of {problem_id, samples}")->required();
    score_cmd->add_option("--gold", sa.gold, "JSONL of {problem_id, answer}")->required();
    score_cmd->add_option("-n,--n", sa.n, "Samples per question to vote over")->check(CLI::PositiveNumber);
    score_cmd->add_option("--run", sa.run_name, "Run name shown in the report (e.g. GSM8K/Mistral-7B)");
    score_cmd->add_option("--report", sa.report, "Write the report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kOk : kUsageError;
    }

    if (*validate_cmd) {
        va.config = config;
        return cmd_validate(va, out, err);
    }
    if (*build_cmd) {
        ba.config = config;
        return cmd_build(ba, out, err);
    }
    if (*losses_cmd) return cmd_losses_check(out, err);
    if (*score_cmd) return cmd_score(sa, out, err);
    return kUsageError;
}

} // namespace stepwise::cli
