#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace stepwise {

/// Student (restricted action set) and teacher (full action set) prompt
/// templates. Placeholders: {question}, {action_list}, {wrong_trace},
/// {reference_answer}.
struct PromptTemplates {
    std::string student;
    std::string teacher;

    /// The templates shipped in prompts/, compiled in.
    [[nodiscard]] static PromptTemplates defaults();
    /// Empty paths keep the corresponding default. Throws IoError.
    [[nodiscard]] static PromptTemplates load(const std::filesystem::path& student_path,
                                              const std::filesystem::path& teacher_path);
};

/// Replaces every `{name}` whose name is a key of `vars`; other braces are
/// left alone.
[[nodiscard]] std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars);

/// Action list for the prompt: one line per action with its header syntax
/// and definition. Verify and Backtrack are listed only when `full`.
[[nodiscard]] std::string action_list(bool full);

} // namespace stepwise
