#include "stepwise/action.hpp"

#include <bit>
#include <stdexcept>

namespace stepwise {

namespace {
constexpr std::array<std::string_view, 7> kNames = {
    "Formalize", "Decompose", "SolveSubques", "SolveParent", "Verify", "Backtrack", "Summarize",
};
} // namespace

std::string_view to_string(ActionKind kind) noexcept {
    return kNames[static_cast<std::size_t>(kind)];
}

std::optional<ActionKind> action_kind_from_string(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<ActionKind>(i);
    }
    return std::nullopt;
}

std::string_view to_string(Verdict verdict) noexcept {
    return verdict == Verdict::Pass ? "PASS" : "FAIL";
}

Action Action::solve_subques(std::size_t index) {
    if (index == 0) throw std::invalid_argument("subquestion index is 1-based");
    return Action(ActionKind::SolveSubques, index);
}

Action Action::verify(Verdict verdict) noexcept {
    return Action(ActionKind::Verify, verdict == Verdict::Pass ? 0 : 1);
}

Action Action::backtrack(std::size_t target_index) noexcept {
    return Action(ActionKind::Backtrack, target_index);
}

Action Action::simple(ActionKind kind) {
    switch (kind) {
    case ActionKind::SolveSubques:
    case ActionKind::Verify:
    case ActionKind::Backtrack:
        throw std::invalid_argument(std::string(to_string(kind)) + " requires a payload");
    default:
        return Action(kind);
    }
}

std::optional<Verdict> Action::verdict() const noexcept {
    if (kind_ != ActionKind::Verify) return std::nullopt;
    return payload_ == 0 ? Verdict::Pass : Verdict::Fail;
}

std::optional<std::size_t> Action::subquestion_index() const noexcept {
    if (kind_ != ActionKind::SolveSubques) return std::nullopt;
    return payload_;
}

std::optional<std::size_t> Action::target_index() const noexcept {
    if (kind_ != ActionKind::Backtrack) return std::nullopt;
    return payload_;
}

std::size_t ActionKindSet::size() const noexcept {
    return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<ActionKind> ActionKindSet::to_vector() const {
    std::vector<ActionKind> out;
    for (auto k : kAllActionKinds) {
        if (contains(k)) out.push_back(k);
    }
    return out;
}

} // namespace stepwise
