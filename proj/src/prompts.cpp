#include "stepwise/prompts.hpp"

#include "stepwise/errors.hpp"
#include "default_prompts.hpp"

#include <fstream>
#include <sstream>

namespace stepwise {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

PromptTemplates PromptTemplates::defaults() {
    return PromptTemplates{std::string(detail::kDefaultStudentPrompt), std::string(detail::kDefaultTeacherPrompt)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& student_path,
                                      const std::filesystem::path& teacher_path) {
    PromptTemplates t = defaults();
    if (!student_path.empty()) t.student = read_file(student_path);
    if (!teacher_path.empty()) t.teacher = read_file(teacher_path);
    return t;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += tmpl[i++];
    }
    return out;
}

std::string action_list(bool full) {
    std::string out;
    out += "- [ACTION: Formalize] : formalize the question mathematically, listing variables and relations.\n";
    out += "- [ACTION: Decompose] : divide the original question into numbered subquestions.\n";
    out += "- [ACTION: SolveSubques <k>] : provide the solution for subquestion k.\n";
    out += "- [ACTION: SolveParent] : solve the original question from the subquestion results.\n";
    if (full) {
        out += "- [ACTION: Verify -> PASS] or [ACTION: Verify -> FAIL] : check the correctness of the current state.\n";
        out += "- [ACTION: Backtrack -> <index>] : return to the last correct state.\n";
    }
    out += "- [ACTION: Summarize] : state the final answer as `#### <answer>`.";
    return out;
}

} // namespace stepwise
