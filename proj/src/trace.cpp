#include "stepwise/trace.hpp"

#include "stepwise/errors.hpp"
#include "text_util.hpp"

#include <algorithm>

namespace stepwise {

bool Trace::has_summarize() const noexcept {
    return std::any_of(states.begin(), states.end(), [](const StateNode& s) {
        return s.action && s.action->kind() == ActionKind::Summarize;
    });
}

std::optional<NormalizedAnswer> derive_final_answer(const Trace& trace) {
    for (auto it = trace.states.rbegin(); it != trace.states.rend(); ++it) {
        if (it->action && it->action->kind() == ActionKind::Summarize) {
            return try_extract_final_answer(it->content);
        }
    }
    return std::nullopt;
}

Trace build_trace(std::string question, std::span<const Step> steps) {
    if (steps.empty()) throw EmptySteps();
    Trace trace;
    trace.states.reserve(steps.size() + 1);
    trace.states.push_back(StateNode{0, std::nullopt, question});
    trace.question = std::move(question);
    for (const auto& step : steps) {
        trace.states.push_back(
            StateNode{trace.states.size(), step.action, std::string(detail::trim(step.content))});
    }
    trace.final_answer = derive_final_answer(trace);
    return trace;
}

} // namespace stepwise
