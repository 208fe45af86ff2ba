#pragma once

#include "stepwise/action.hpp"
#include "stepwise/trace.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stepwise {

/// Limits and action-set restrictions applied while judging a trace.
struct TransitionRules {
    /// False restricts the action set to the student stage (no Verify, no
    /// Backtrack).
    bool allow_verify_backtrack = true;
    /// Cap on SolveSubques indices when the Decompose block does not
    /// enumerate its subquestions.
    std::size_t max_subquestions = 10;
    /// Upper bound on the number of actions in a trace; at least 3.
    std::size_t max_states = 64;

    [[nodiscard]] static TransitionRules stage1() { return TransitionRules{false, 10, 64}; }
    [[nodiscard]] static TransitionRules full() { return TransitionRules{true, 10, 64}; }

    /// Throws std::invalid_argument when a field is out of range.
    void check() const;
};

enum class RuleCode {
    MalformedStructure,
    EmptyContent,
    TraceTooLong,
    ActionNotInStageSet,
    MissingFormalize,
    PrematureSummarize,
    DuplicateDecompose,
    BacktrackRequired,
    IllegalTransition,
    SubquestionWithoutDecompose,
    SubquestionOutOfRange,
    BadBacktrackTarget,
    ActionAfterSummarize,
    MissingSummarize,
};

/// Stable upper-snake name, e.g. "PREMATURE_SUMMARIZE".
[[nodiscard]] std::string_view to_string(RuleCode code) noexcept;

struct Violation {
    std::size_t state_index = 0;
    RuleCode code = RuleCode::IllegalTransition;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationVerdict {
    bool valid = true;
    std::vector<Violation> violations;

    [[nodiscard]] bool has(RuleCode code) const noexcept;

    friend bool operator==(const ValidationVerdict&, const ValidationVerdict&) = default;
};

/// Action kinds that may legally extend `prefix`.
///
/// The transition order is a fixed automaton: Formalize first, an optional
/// single Decompose, any number of SolveSubques, SolveParent, then the
/// terminal Summarize. Verify may follow either solving action; a failed
/// Verify must be followed by Backtrack, which resumes from the successors
/// of the state it returns to. An empty set is returned once the prefix
/// holds `rules.max_states` actions.
///
/// Throws MalformedPrefix if the indices are not consecutive from 0, if the
/// prefix already contains a Summarize, or if the prefix itself breaks a
/// transition rule.
[[nodiscard]] ActionKindSet legal_next_actions(const Trace& prefix, const TransitionRules& rules);

/// Judges a complete trace. Never throws on trace content; every problem is
/// reported as a violation.
[[nodiscard]] ValidationVerdict validate(const Trace& trace, const TransitionRules& rules);

/// Number of enumerated items ("1.", "2.", ...) at the start of lines in a
/// Decompose block, or nullopt when there are none.
[[nodiscard]] std::optional<std::size_t> count_enumerated_items(std::string_view content) noexcept;

/// The state a Backtrack at the end of `prefix` must return to: the most
/// recent checkpoint on the live path. Checkpoints are the initial state,
/// the Formalize and Decompose states and every passing Verify; states
/// abandoned by an earlier Backtrack are not on the live path. Returns
/// nullopt when the prefix breaks a transition rule.
[[nodiscard]] std::optional<std::size_t> expected_backtrack_target(const Trace& prefix,
                                                                   const TransitionRules& rules);

} // namespace stepwise
