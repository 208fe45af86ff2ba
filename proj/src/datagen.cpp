#include "stepwise/datagen.hpp"

#include "parallel.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/trace_codec.hpp"
#include "text_util.hpp"

#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>

namespace stepwise::datagen {

namespace {

using nlohmann::json;

// Generators sometimes open with chatter; the trace starts at the first
// header line.
std::string_view from_first_header(std::string_view raw) {
    if (raw.starts_with("[ACTION:")) return raw;
    auto pos = raw.find("\n[ACTION:");
    return pos == std::string_view::npos ? raw : raw.substr(pos + 1);
}

Attempt judge(Stage stage, std::string raw, const ProblemInstance& problem, const TransitionRules& rules) {
    Attempt a;
    a.stage = stage;
    a.raw_text = std::move(raw);
    try {
        a.trace = parse_tagged(from_first_header(a.raw_text), problem.question);
    } catch (const Error& e) {
        a.parse_error = e.what();
        return a;
    }
    a.verdict = validate(*a.trace, rules);
    a.extracted_answer = a.trace->final_answer;
    return a;
}

bool accepted(const Attempt& a, const ProblemInstance& problem) {
    return a.trace && a.verdict && a.verdict->valid && a.extracted_answer == problem.reference_answer;
}

ChatRequest make_request(const ProblemInstance& problem, Stage stage, std::size_t attempt, std::string prompt,
                         double temperature) {
    ChatRequest req;
    req.problem_id = problem.id;
    req.stage = stage;
    req.attempt = attempt;
    req.temperature = temperature;
    req.messages.push_back({"user", std::move(prompt)});
    return req;
}

ConstructionCase student_case(const ProblemInstance& problem, GeneratorClient& gen, const TransitionRules& rules,
                              const RunOptions& options) {
    ConstructionCase c{problem, Stage::StageI, {}, Failed{"no attempts"}};
    const std::string prompt = render_template(
        options.prompts.student, {{"question", problem.question}, {"action_list", action_list(false)}});

    std::optional<std::size_t> last_parsed;
    for (std::size_t attempt = 0; attempt < options.max_retries; ++attempt) {
        std::string text;
        try {
            text = gen.complete(make_request(problem, Stage::StageI, attempt, prompt, options.temperature));
        } catch (const TransportError& e) {
            c.outcome = Failed{std::string("transport: ") + e.what()};
            return c;
        }
        c.attempts.push_back(judge(Stage::StageI, std::move(text), problem, rules));
        const Attempt& a = c.attempts.back();
        if (accepted(a, problem)) {
            c.outcome = RightCase{*a.trace};
            return c;
        }
        if (a.trace) last_parsed = c.attempts.size() - 1;
    }
    if (last_parsed) {
        c.outcome = WrongCase{*c.attempts[*last_parsed].trace};
    } else {
        c.outcome = Failed{"no parseable attempt in " + std::to_string(options.max_retries) + " tries"};
    }
    return c;
}

ConstructionCase teacher_case(const ConstructionCase& wrong, GeneratorClient& gen, const TransitionRules& rules,
                              const RunOptions& options) {
    const auto& problem = wrong.problem;
    const Trace& rejected = std::get<WrongCase>(wrong.outcome).trace;
    ConstructionCase c{problem, Stage::StageII, wrong.attempts, Failed{"no attempts"}};
    const std::string prompt = render_template(options.prompts.teacher,
                                               {{"question", problem.question},
                                                {"action_list", action_list(true)},
                                                {"wrong_trace", serialize_tagged(rejected)},
                                                {"reference_answer", problem.reference_answer.canonical()}});

    for (std::size_t attempt = 0; attempt < options.max_retries; ++attempt) {
        std::string text;
        try {
            text = gen.complete(make_request(problem, Stage::StageII, attempt, prompt, options.temperature));
        } catch (const TransportError& e) {
            c.outcome = Failed{std::string("transport: ") + e.what()};
            return c;
        }
        c.attempts.push_back(judge(Stage::StageII, std::move(text), problem, rules));
        const Attempt& a = c.attempts.back();
        if (accepted(a, problem)) {
            c.outcome = Corrected{PreferencePair{problem.question, *a.trace, rejected}};
            return c;
        }
    }
    c.outcome = Failed{"teacher produced no valid correct trace in " + std::to_string(options.max_retries) +
                       " tries"};
    return c;
}

json problem_header(const ProblemInstance& p) {
    return {{"id", p.id}, {"question", p.question}, {"reference_answer", p.reference_answer.canonical()}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::optional<NormalizedAnswer> row_reference(const json& row, std::vector<std::string>& problems) {
    auto it = row.find("reference_answer");
    if (it == row.end() || !it->is_string()) {
        problems.emplace_back("missing reference_answer");
        return std::nullopt;
    }
    try {
        return NormalizedAnswer::from_canonical(it->get<std::string>());
    } catch (const Error& e) {
        problems.emplace_back(std::string("bad reference_answer: ") + e.what());
        return std::nullopt;
    }
}

std::optional<Trace> row_trace(const json& row, const char* key, std::vector<std::string>& problems) {
    auto it = row.find(key);
    if (it == row.end()) {
        problems.emplace_back(std::string("missing ") + key);
        return std::nullopt;
    }
    try {
        return from_record(*it);
    } catch (const Error& e) {
        problems.emplace_back(std::string(key) + ": " + e.what());
        return std::nullopt;
    }
}

} // namespace

std::vector<ProblemInstance> load_problems(const std::filesystem::path& path) {
    std::vector<ProblemInstance> out;
    std::set<std::string> seen;
    auto rows = read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = path.string() + " record " + std::to_string(i + 1);
        const auto& row = rows[i];
        for (const char* key : {"id", "question", "reference_answer"}) {
            if (!row.contains(key) || !row[key].is_string()) {
                throw SchemaError(where + ": '" + key + "' must be a string");
            }
        }
        std::string id = row["id"].get<std::string>();
        if (!seen.insert(id).second) throw SchemaError(where + ": duplicate id '" + id + "'");
        try {
            out.push_back({std::move(id), row["question"].get<std::string>(),
                           normalize_answer(row["reference_answer"].get<std::string>())});
        } catch (const Unparseable& e) {
            throw SchemaError(where + ": " + e.what());
        }
    }
    return out;
}

RunOptions RunOptions::from(const GeneratorConfig& config, PromptTemplates prompts) {
    config.check();
    return RunOptions{config.temperature, config.max_retries, config.parallelism, std::move(prompts)};
}

std::vector<ConstructionCase> run_stage1(std::span<const ProblemInstance> problems, GeneratorClient& gen,
                                         const TransitionRules& rules, const RunOptions& options) {
    if (rules.allow_verify_backtrack) throw std::invalid_argument("stage I runs with Verify/Backtrack excluded");
    if (options.max_retries < 1) throw std::invalid_argument("max_retries must be at least 1");
    rules.check();
    return detail::parallel_map<ConstructionCase>(problems.size(), options.parallelism, [&](std::size_t i) {
        return student_case(problems[i], gen, rules, options);
    });
}

std::vector<ConstructionCase> run_stage2(std::span<const ConstructionCase> wrong_cases, GeneratorClient& gen,
                                         const TransitionRules& rules, const RunOptions& options) {
    if (!rules.allow_verify_backtrack) throw std::invalid_argument("stage II uses the full action set");
    if (options.max_retries < 1) throw std::invalid_argument("max_retries must be at least 1");
    rules.check();
    for (const auto& c : wrong_cases) {
        if (!std::holds_alternative<WrongCase>(c.outcome)) {
            throw std::invalid_argument("stage II input '" + c.problem.id + "' is not a WrongCase");
        }
    }
    return detail::parallel_map<ConstructionCase>(wrong_cases.size(), options.parallelism, [&](std::size_t i) {
        return teacher_case(wrong_cases[i], gen, rules, options);
    });
}

std::vector<ConstructionCase> harvest_model_errors(std::span<const std::pair<ProblemInstance, Trace>> predictions,
                                                   const TransitionRules& rules) {
    std::vector<ConstructionCase> out;
    for (const auto& [problem, trace] : predictions) {
        Attempt a;
        a.stage = Stage::StageII;
        a.raw_text = serialize_tagged(trace);
        a.trace = trace;
        a.verdict = validate(trace, rules);
        a.extracted_answer = trace.final_answer;
        if (accepted(a, problem)) continue;
        out.push_back(ConstructionCase{problem, Stage::StageII, {std::move(a)}, WrongCase{trace}});
    }
    return out;
}

json default_hyperparameters() {
    // Recorded LoRA fine-tuning defaults; beta is this toolkit's DPO default.
    return {{"lora_rank", 16},    {"learning_rate", 1.0e-4},       {"epochs", 10},
            {"optimizer", "AdamW"}, {"lr_scheduler", "cosine decay"}, {"batch_size", 32},
            {"dpo_beta", 0.1}};
}

json DatasetManifest::to_json() const {
    return {{"right_count", right_count},         {"pair_count", pair_count}, {"failed_count", failed_count},
            {"hyperparameters", hyperparameters}, {"generator", generator},   {"created_at", created_at}};
}

DatasetManifest emit_datasets(std::span<const ConstructionCase> cases, const std::filesystem::path& out_dir,
                              const std::string& generator_name, const std::string& created_at,
                              const json& hyperparameters) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    DatasetManifest manifest;
    manifest.generator = generator_name;
    manifest.created_at = created_at;
    manifest.hyperparameters = hyperparameters;
    std::vector<json> sft;
    std::vector<json> dpo;
    for (const auto& c : cases) {
        if (const auto* right = std::get_if<RightCase>(&c.outcome)) {
            json row = problem_header(c.problem);
            row["trace"] = to_record(right->trace);
            sft.push_back(std::move(row));
        } else if (const auto* fixed = std::get_if<Corrected>(&c.outcome)) {
            json row = problem_header(c.problem);
            row["accepted"] = to_record(fixed->pair.accepted);
            row["rejected"] = to_record(fixed->pair.rejected);
            dpo.push_back(std::move(row));
        } else {
            ++manifest.failed_count;
        }
    }
    manifest.right_count = sft.size();
    manifest.pair_count = dpo.size();

    write_jsonl(out_dir / "sft.jsonl", sft);
    write_jsonl(out_dir / "dpo.jsonl", dpo);
    write_text(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    return manifest;
}

BuildResult build_datasets(std::span<const ProblemInstance> problems, GeneratorClient& gen,
                           const TransitionRules& stage1_rules, const TransitionRules& full_rules,
                           const RunOptions& options, const std::filesystem::path& out_dir,
                           const std::string& generator_name, const std::string& created_at,
                           const json& hyperparameters) {
    BuildResult result;
    result.cases = run_stage1(problems, gen, stage1_rules, options);

    std::vector<std::size_t> positions;
    std::vector<ConstructionCase> wrong;
    for (std::size_t i = 0; i < result.cases.size(); ++i) {
        if (std::holds_alternative<WrongCase>(result.cases[i].outcome)) {
            positions.push_back(i);
            wrong.push_back(result.cases[i]);
        }
    }
    auto corrected = run_stage2(wrong, gen, full_rules, options);
    for (std::size_t j = 0; j < positions.size(); ++j) result.cases[positions[j]] = std::move(corrected[j]);

    result.manifest = emit_datasets(result.cases, out_dir, generator_name, created_at, hyperparameters);
    return result;
}

std::vector<std::string> check_sft_row(const json& row, const TransitionRules& stage1_rules) {
    std::vector<std::string> problems;
    auto gold = row_reference(row, problems);
    auto trace = row_trace(row, "trace", problems);
    if (!trace) return problems;
    auto verdict = validate(*trace, stage1_rules);
    if (!verdict.valid) {
        problems.push_back("trace invalid under stage I rules: " +
                           std::string(to_string(verdict.violations.front().code)));
    }
    if (gold && trace->final_answer != gold) problems.emplace_back("final answer differs from reference");
    return problems;
}

std::vector<std::string> check_dpo_row(const json& row, const TransitionRules& stage1_rules,
                                       const TransitionRules& full_rules) {
    std::vector<std::string> problems;
    auto gold = row_reference(row, problems);
    auto accepted_trace = row_trace(row, "accepted", problems);
    auto rejected_trace = row_trace(row, "rejected", problems);
    if (accepted_trace) {
        if (!validate(*accepted_trace, full_rules).valid) problems.emplace_back("accepted trace is invalid");
        if (gold && accepted_trace->final_answer != gold) problems.emplace_back("accepted answer is wrong");
    }
    if (rejected_trace && gold) {
        bool invalid = !validate(*rejected_trace, stage1_rules).valid;
        bool incorrect = rejected_trace->final_answer != gold;
        if (!invalid && !incorrect) problems.emplace_back("rejected trace is both valid and correct");
    }
    return problems;
}

std::string iso8601_utc(long long unix_seconds) {
    std::time_t t = static_cast<std::time_t>(unix_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace stepwise::datagen
