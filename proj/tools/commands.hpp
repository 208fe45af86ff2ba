#pragma once

#include "stepwise/generator.hpp"
#include "stepwise/state_space.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace stepwise::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kSemanticFailure = 1;
inline constexpr int kUsageError = 2;

/// Settings read from the --config JSON file. Every key is optional;
/// unknown keys are rejected.
struct FileConfig {
    GeneratorConfig generator;
    std::string credential_env = "STEPWISE_API_KEY";
    std::filesystem::path student_prompt;
    std::filesystem::path teacher_prompt;
    std::size_t max_subquestions = 10;
    std::size_t max_states = 64;
    double dpo_beta = 0.1;

    [[nodiscard]] TransitionRules rules(bool allow_verify_backtrack) const {
        return TransitionRules{allow_verify_backtrack, max_subquestions, max_states};
    }
};

/// Throws ConfigError / IoError.
[[nodiscard]] FileConfig load_config(const std::optional<std::filesystem::path>& path);

struct ValidateArgs {
    std::filesystem::path traces;
    int stage = 2;
    std::optional<std::filesystem::path> config;
};

struct BuildArgs {
    std::filesystem::path problems;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> mock;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::filesystem::path> config;
};

struct ScoreArgs {
    std::filesystem::path predictions;
    std::filesystem::path gold;
    std::size_t n = 1;
    std::string run_name = "measured";
    std::optional<std::filesystem::path> report;
};

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err);
int cmd_build(const BuildArgs& args, std::ostream& out, std::ostream& err);
int cmd_losses_check(std::ostream& out, std::ostream& err);
int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace stepwise::cli
