#pragma once

#include "stepwise/action.hpp"
#include "stepwise/answer.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace stepwise {

/// One point in the problem-solving process. Node 0 is the original
/// question and carries no action.
struct StateNode {
    std::size_t index = 0;
    std::optional<Action> action;
    std::string content;

    friend bool operator==(const StateNode&, const StateNode&) = default;
};

/// An ordered sequence of action-tagged states from the question to the
/// final answer.
struct Trace {
    std::string question;
    std::vector<StateNode> states;
    /// Canonical answer extracted from the last Summarize block, when there
    /// is one and it contains a number.
    std::optional<NormalizedAnswer> final_answer;

    /// Number of action-carrying states (everything after node 0).
    [[nodiscard]] std::size_t action_count() const noexcept {
        return states.empty() ? 0 : states.size() - 1;
    }
    [[nodiscard]] bool has_summarize() const noexcept;

    friend bool operator==(const Trace&, const Trace&) = default;
};

struct Step {
    Action action;
    std::string content;
};

/// Assembles a trace with consecutive indices, node 0 holding the question.
/// Content is whitespace-trimmed; the final answer is extracted from the
/// last Summarize step. The result is not validated. Throws EmptySteps.
[[nodiscard]] Trace build_trace(std::string question, std::span<const Step> steps);

/// Final answer of a trace as the codec and builder derive it: extraction
/// over the content of the last Summarize node.
[[nodiscard]] std::optional<NormalizedAnswer> derive_final_answer(const Trace& trace);

} // namespace stepwise
