#pragma once

#include "stepwise/answer.hpp"
#include "stepwise/generator.hpp"
#include "stepwise/prompts.hpp"
#include "stepwise/state_space.hpp"
#include "stepwise/trace.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stepwise::datagen {

struct ProblemInstance {
    std::string id;
    std::string question;
    NormalizedAnswer reference_answer;
};

/// JSONL of {"id", "question", "reference_answer"}. Ids must be unique.
/// Throws IoError / SchemaError.
[[nodiscard]] std::vector<ProblemInstance> load_problems(const std::filesystem::path& path);

/// One generator response and how it was judged.
struct Attempt {
    Stage stage = Stage::StageI;
    std::string raw_text;
    std::optional<Trace> trace;      // absent when the text did not parse
    std::string parse_error;         // set when trace is absent
    std::optional<ValidationVerdict> verdict;
    std::optional<NormalizedAnswer> extracted_answer;
};

/// Accepted (verified, correct) and rejected trace for the same question.
struct PreferencePair {
    std::string question;
    Trace accepted;
    Trace rejected;
};

struct RightCase {
    Trace trace;
};
struct WrongCase {
    Trace trace;
};
struct Corrected {
    PreferencePair pair;
};
struct Failed {
    std::string cause;
};
using Outcome = std::variant<RightCase, WrongCase, Corrected, Failed>;

struct ConstructionCase {
    ProblemInstance problem;
    Stage stage = Stage::StageI;
    std::vector<Attempt> attempts;
    Outcome outcome = Failed{"not run"};
};

/// Generation settings shared by both stages.
struct RunOptions {
    double temperature = 0.7;
    std::size_t max_retries = 3;
    std::size_t parallelism = 4;
    PromptTemplates prompts = PromptTemplates::defaults();

    [[nodiscard]] static RunOptions from(const GeneratorConfig& config, PromptTemplates prompts);
};

/// Student stage: restricted action list, up to max_retries independent
/// attempts per problem. The first valid, correct attempt makes a
/// RightCase; otherwise the last parseable attempt becomes a WrongCase, or
/// the problem is Failed when nothing parsed or the transport broke.
/// Results follow input order. Requires !rules.allow_verify_backtrack.
[[nodiscard]] std::vector<ConstructionCase> run_stage1(std::span<const ProblemInstance> problems,
                                                       GeneratorClient& gen, const TransitionRules& rules,
                                                       const RunOptions& options = {});

/// Teacher stage over WrongCase inputs: the teacher sees the problem, the
/// wrong trace, the reference answer and the full action list. A valid,
/// correct correction yields Corrected(pair{accepted = correction,
/// rejected = wrong trace}); exhausting the retries yields Failed.
/// Requires rules.allow_verify_backtrack and WrongCase inputs.
[[nodiscard]] std::vector<ConstructionCase> run_stage2(std::span<const ConstructionCase> wrong_cases,
                                                       GeneratorClient& gen, const TransitionRules& rules,
                                                       const RunOptions& options = {});

/// Keeps predictions that are wrong or structurally invalid under `rules`
/// and wraps them as WrongCase inputs for the teacher stage.
[[nodiscard]] std::vector<ConstructionCase> harvest_model_errors(
    std::span<const std::pair<ProblemInstance, Trace>> predictions,
    const TransitionRules& rules = TransitionRules::full());

/// Recorded training defaults for the two curricular stages.
[[nodiscard]] nlohmann::json default_hyperparameters();

struct DatasetManifest {
    std::size_t right_count = 0;
    std::size_t pair_count = 0;
    std::size_t failed_count = 0;
    nlohmann::json hyperparameters = default_hyperparameters();
    std::string generator;
    std::string created_at; // ISO-8601 UTC

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Writes sft.jsonl (one line per RightCase), dpo.jsonl (one line per
/// Corrected) and manifest.json into `out_dir`, creating it if needed.
/// Failed and unresolved WrongCase outcomes are counted as failed.
/// `hyperparameters` is recorded verbatim in the manifest. Throws IoError.
DatasetManifest emit_datasets(std::span<const ConstructionCase> cases, const std::filesystem::path& out_dir,
                              const std::string& generator_name, const std::string& created_at,
                              const nlohmann::json& hyperparameters = default_hyperparameters());

struct BuildResult {
    std::vector<ConstructionCase> cases;
    DatasetManifest manifest;
};

/// Student stage, teacher stage on the student failures, then emission.
/// Each case in the result sits at its problem's input position.
[[nodiscard]] BuildResult build_datasets(std::span<const ProblemInstance> problems, GeneratorClient& gen,
                                         const TransitionRules& stage1_rules, const TransitionRules& full_rules,
                                         const RunOptions& options, const std::filesystem::path& out_dir,
                                         const std::string& generator_name, const std::string& created_at,
                                         const nlohmann::json& hyperparameters = default_hyperparameters());

/// Dataset invariants, checked from the emitted records alone.
/// Returns one message per broken invariant (empty when all hold).
[[nodiscard]] std::vector<std::string> check_sft_row(const nlohmann::json& row, const TransitionRules& stage1_rules);
[[nodiscard]] std::vector<std::string> check_dpo_row(const nlohmann::json& row, const TransitionRules& stage1_rules,
                                                     const TransitionRules& full_rules);

/// Formats a Unix time as "YYYY-MM-DDTHH:MM:SSZ".
[[nodiscard]] std::string iso8601_utc(long long unix_seconds);

} // namespace stepwise::datagen
