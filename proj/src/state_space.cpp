#include "stepwise/state_space.hpp"

#include "stepwise/errors.hpp"
#include "text_util.hpp"

#include <stdexcept>

namespace stepwise {

namespace {

enum class Phase {
    Start,
    Formalized,
    Decomposed,
    SubSolved,
    ParentSolved,
    SubPassed,
    ParentPassed,
    Failed,
    Done,
};

bool is_checkpoint(const StateNode& node) noexcept {
    if (!node.action) return true; // initial state
    switch (node.action->kind()) {
    case ActionKind::Formalize:
    case ActionKind::Decompose:
        return true;
    case ActionKind::Verify:
        return node.action->verdict() == Verdict::Pass;
    default:
        return false;
    }
}

// Runs the automaton over a (structurally sound) trace, recording the
// phase reached after each node and the live path used to resolve
// Backtrack targets.
class Walker {
  public:
    Walker(const Trace& trace, const TransitionRules& rules)
        : trace_(trace), rules_(rules), subquestion_limit_(rules.max_subquestions) {
        phases_.reserve(trace.states.size());
        live_.reserve(trace.states.size());
        phases_.push_back(Phase::Start);
        live_.push_back(0);
    }

    [[nodiscard]] ActionKindSet successors() const noexcept {
        ActionKindSet out;
        switch (phase()) {
        case Phase::Start:
            out.insert(ActionKind::Formalize);
            break;
        case Phase::Formalized:
            if (!decomposed_) out.insert(ActionKind::Decompose);
            out.insert(ActionKind::SolveParent);
            break;
        case Phase::Decomposed:
        case Phase::SubPassed:
            out = {ActionKind::SolveSubques, ActionKind::SolveParent};
            break;
        case Phase::SubSolved:
            out = {ActionKind::SolveSubques, ActionKind::SolveParent, ActionKind::Verify};
            break;
        case Phase::ParentSolved:
            out = {ActionKind::Summarize, ActionKind::Verify};
            break;
        case Phase::ParentPassed:
            out.insert(ActionKind::Summarize);
            break;
        case Phase::Failed:
            out.insert(ActionKind::Backtrack);
            break;
        case Phase::Done:
            break;
        }
        if (!rules_.allow_verify_backtrack) {
            out.erase(ActionKind::Verify);
            out.erase(ActionKind::Backtrack);
        }
        return out;
    }

    [[nodiscard]] std::size_t checkpoint() const noexcept {
        for (auto it = live_.rbegin(); it != live_.rend(); ++it) {
            if (is_checkpoint(trace_.states[*it])) return *it;
        }
        return 0;
    }

    /// Consumes node `i`. Returns false (after recording a violation unless
    /// the node was already reported) when the automaton cannot continue.
    bool step(std::size_t i, std::vector<Violation>& out) {
        const StateNode& node = trace_.states[i];
        const Action& action = *node.action;
        const ActionKind kind = action.kind();

        if (!successors().contains(kind)) {
            if (!rules_.allow_verify_backtrack &&
                (kind == ActionKind::Verify || kind == ActionKind::Backtrack)) {
                return false; // reported up front
            }
            out.push_back(illegal(i, kind));
            return false;
        }

        Phase next = phase();
        switch (kind) {
        case ActionKind::Formalize:
            next = Phase::Formalized;
            break;
        case ActionKind::Decompose:
            decomposed_ = true;
            subquestion_limit_ = count_enumerated_items(node.content).value_or(rules_.max_subquestions);
            next = Phase::Decomposed;
            break;
        case ActionKind::SolveSubques: {
            auto k = *action.subquestion_index();
            if (k > subquestion_limit_) {
                out.push_back({i, RuleCode::SubquestionOutOfRange,
                               "subquestion " + std::to_string(k) + " exceeds the " +
                                   std::to_string(subquestion_limit_) + " declared by Decompose"});
            }
            next = Phase::SubSolved;
            break;
        }
        case ActionKind::SolveParent:
            next = Phase::ParentSolved;
            break;
        case ActionKind::Verify:
            if (action.verdict() == Verdict::Fail) {
                next = Phase::Failed;
            } else {
                next = phase() == Phase::SubSolved ? Phase::SubPassed : Phase::ParentPassed;
            }
            break;
        case ActionKind::Backtrack: {
            auto target = *action.target_index();
            auto expected = checkpoint();
            if (target != expected) {
                out.push_back({i, RuleCode::BadBacktrackTarget,
                               "backtrack target " + std::to_string(target) +
                                   " is not the last correct state " + std::to_string(expected)});
                return false;
            }
            while (live_.back() != target) live_.pop_back();
            next = phases_[target];
            break;
        }
        case ActionKind::Summarize:
            next = Phase::Done;
            break;
        }
        phases_.push_back(next);
        live_.push_back(i);
        return true;
    }

    [[nodiscard]] Phase phase() const noexcept { return phases_.back(); }

  private:
    [[nodiscard]] Violation illegal(std::size_t i, ActionKind kind) const {
        std::string name(to_string(kind));
        if (phase() == Phase::Done) {
            return {i, RuleCode::ActionAfterSummarize, name + " after the terminal Summarize"};
        }
        if (kind == ActionKind::Summarize) {
            return {i, RuleCode::PrematureSummarize, "Summarize before the parent question is solved"};
        }
        if (phase() == Phase::Start) {
            return {i, RuleCode::MissingFormalize, "first action must be Formalize, got " + name};
        }
        if (phase() == Phase::Failed) {
            return {i, RuleCode::BacktrackRequired, "a failed Verify must be followed by Backtrack, got " + name};
        }
        if (kind == ActionKind::Decompose && decomposed_) {
            return {i, RuleCode::DuplicateDecompose, "at most one Decompose per trace"};
        }
        if (kind == ActionKind::SolveSubques && !decomposed_) {
            return {i, RuleCode::SubquestionWithoutDecompose, "SolveSubques without a prior Decompose"};
        }
        return {i, RuleCode::IllegalTransition, name + " is not a legal successor here"};
    }

    const Trace& trace_;
    const TransitionRules& rules_;
    std::vector<Phase> phases_;
    std::vector<std::size_t> live_;
    bool decomposed_ = false;
    std::size_t subquestion_limit_;
};

void check_structure(const Trace& trace, std::vector<Violation>& out) {
    if (trace.states.empty()) {
        out.push_back({0, RuleCode::MalformedStructure, "trace has no initial state"});
        return;
    }
    for (std::size_t i = 0; i < trace.states.size(); ++i) {
        const auto& node = trace.states[i];
        if (node.index != i) {
            out.push_back({i, RuleCode::MalformedStructure,
                           "state at position " + std::to_string(i) + " has index " +
                               std::to_string(node.index)});
        }
        if (i == 0 && node.action) {
            out.push_back({0, RuleCode::MalformedStructure, "initial state carries an action"});
        }
        if (i > 0 && !node.action) {
            out.push_back({i, RuleCode::MalformedStructure, "state has no action"});
        }
    }
}

} // namespace

void TransitionRules::check() const {
    if (max_states < 3) throw std::invalid_argument("max_states must be at least 3");
    if (max_subquestions < 1) throw std::invalid_argument("max_subquestions must be positive");
}

std::string_view to_string(RuleCode code) noexcept {
    switch (code) {
    case RuleCode::MalformedStructure: return "MALFORMED_STRUCTURE";
    case RuleCode::EmptyContent: return "EMPTY_CONTENT";
    case RuleCode::TraceTooLong: return "TRACE_TOO_LONG";
    case RuleCode::ActionNotInStageSet: return "ACTION_NOT_IN_STAGE_SET";
    case RuleCode::MissingFormalize: return "MISSING_FORMALIZE";
    case RuleCode::PrematureSummarize: return "PREMATURE_SUMMARIZE";
    case RuleCode::DuplicateDecompose: return "DUPLICATE_DECOMPOSE";
    case RuleCode::BacktrackRequired: return "BACKTRACK_REQUIRED";
    case RuleCode::IllegalTransition: return "ILLEGAL_TRANSITION";
    case RuleCode::SubquestionWithoutDecompose: return "SUBQUESTION_WITHOUT_DECOMPOSE";
    case RuleCode::SubquestionOutOfRange: return "SUBQUESTION_OUT_OF_RANGE";
    case RuleCode::BadBacktrackTarget: return "BAD_BACKTRACK_TARGET";
    case RuleCode::ActionAfterSummarize: return "ACTION_AFTER_SUMMARIZE";
    case RuleCode::MissingSummarize: return "MISSING_SUMMARIZE";
    }
    return "UNKNOWN";
}

bool ValidationVerdict::has(RuleCode code) const noexcept {
    for (const auto& v : violations) {
        if (v.code == code) return true;
    }
    return false;
}

std::optional<std::size_t> count_enumerated_items(std::string_view content) noexcept {
    std::size_t count = 0;
    for (auto line : detail::split_lines(content)) {
        line = detail::trim(line);
        std::size_t digits = 0;
        while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
        if (digits > 0 && digits < line.size() && line[digits] == '.') ++count;
    }
    if (count == 0) return std::nullopt;
    return count;
}

ValidationVerdict validate(const Trace& trace, const TransitionRules& rules) {
    rules.check();
    ValidationVerdict verdict;
    auto& out = verdict.violations;

    check_structure(trace, out);
    if (!out.empty()) {
        verdict.valid = false;
        return verdict;
    }

    const auto& states = trace.states;
    if (trace.action_count() > rules.max_states) {
        out.push_back({states.size() - 1, RuleCode::TraceTooLong,
                       std::to_string(trace.action_count()) + " actions exceed the limit of " +
                           std::to_string(rules.max_states)});
    }
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (detail::trim(states[i].content).empty()) {
            out.push_back({i, RuleCode::EmptyContent, "state has no content"});
        }
        auto kind = states[i].action->kind();
        if (!rules.allow_verify_backtrack &&
            (kind == ActionKind::Verify || kind == ActionKind::Backtrack)) {
            out.push_back({i, RuleCode::ActionNotInStageSet,
                           std::string(to_string(kind)) + " is not in the stage action set"});
        }
    }

    Walker walker(trace, rules);
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (!walker.step(i, out)) break;
    }

    if (states.size() == 1 || states.back().action->kind() != ActionKind::Summarize) {
        out.push_back({states.size() - 1, RuleCode::MissingSummarize, "trace does not end in Summarize"});
    }

    verdict.valid = out.empty();
    return verdict;
}

namespace {

// Shared prefix handling for legal_next_actions / expected_backtrack_target.
template <typename Fn>
auto walk_prefix(const Trace& prefix, const TransitionRules& rules, Fn&& finish) {
    rules.check();
    std::vector<Violation> issues;
    check_structure(prefix, issues);
    if (!issues.empty()) throw MalformedPrefix("malformed prefix: " + issues.front().message);
    if (prefix.has_summarize()) throw MalformedPrefix("prefix already contains the terminal Summarize");

    Walker walker(prefix, rules);
    for (std::size_t i = 1; i < prefix.states.size(); ++i) {
        auto kind = prefix.states[i].action->kind();
        if (!rules.allow_verify_backtrack &&
            (kind == ActionKind::Verify || kind == ActionKind::Backtrack)) {
            throw MalformedPrefix("prefix uses " + std::string(to_string(kind)) +
                                  ", which is outside the stage action set");
        }
        bool ok = walker.step(i, issues);
        if (!issues.empty()) {
            throw MalformedPrefix("prefix breaks a transition rule at state " +
                                  std::to_string(issues.front().state_index) + ": " +
                                  issues.front().message);
        }
        if (!ok) throw MalformedPrefix("prefix breaks a transition rule");
    }
    return finish(walker);
}

} // namespace

ActionKindSet legal_next_actions(const Trace& prefix, const TransitionRules& rules) {
    return walk_prefix(prefix, rules, [&](const Walker& w) {
        if (prefix.action_count() >= rules.max_states) return ActionKindSet{};
        return w.successors();
    });
}

std::optional<std::size_t> expected_backtrack_target(const Trace& prefix, const TransitionRules& rules) {
    try {
        return walk_prefix(prefix, rules, [](const Walker& w) { return w.checkpoint(); });
    } catch (const MalformedPrefix&) {
        return std::nullopt;
    }
}

} // namespace stepwise
