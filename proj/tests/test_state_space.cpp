#include "stepwise/errors.hpp"
#include "stepwise/state_space.hpp"

#include "support/builders.hpp"
#include "support/enumerate.hpp"
#include "support/oracle.hpp"
#include "support/trace_gen.hpp"

#include <doctest.h>

using namespace stepwise;
using build::actions;

namespace {

const Action F = Action::formalize();
const Action D = Action::decompose();
const Action SP = Action::solve_parent();
const Action VP = Action::verify(Verdict::Pass);
const Action VF = Action::verify(Verdict::Fail);
const Action SUM = Action::summarize();
Action SS(std::size_t k) { return Action::solve_subques(k); }
Action BT(std::size_t t) { return Action::backtrack(t); }

Trace question_only() {
    Trace t;
    t.question = "Q";
    t.states.push_back({0, std::nullopt, "Q"});
    return t;
}

Trace prefix(std::initializer_list<Action> acts) {
    Trace t = question_only();
    for (const auto& a : acts) t.states.push_back({t.states.size(), a, "work"});
    return t;
}

bool only_violation(const ValidationVerdict& v, RuleCode code, std::size_t index) {
    return !v.valid && v.violations.size() == 1 && v.violations[0].code == code &&
           v.violations[0].state_index == index;
}

} // namespace

TEST_CASE("legal_next_actions: documented examples") {
    CHECK(legal_next_actions(question_only(), TransitionRules::full()) == ActionKindSet{ActionKind::Formalize});

    auto after_sub = prefix({F, D, SS(1)});
    CHECK(legal_next_actions(after_sub, TransitionRules::full()) ==
          ActionKindSet{ActionKind::SolveSubques, ActionKind::SolveParent, ActionKind::Verify});
    CHECK(legal_next_actions(after_sub, TransitionRules::stage1()) ==
          ActionKindSet{ActionKind::SolveSubques, ActionKind::SolveParent});

    CHECK_THROWS_AS((void)legal_next_actions(prefix({F, SP, SUM}), TransitionRules::full()), MalformedPrefix);
}

TEST_CASE("legal_next_actions: phases of the automaton") {
    auto full = TransitionRules::full();
    CHECK(legal_next_actions(prefix({F}), full) == ActionKindSet{ActionKind::Decompose, ActionKind::SolveParent});
    CHECK(legal_next_actions(prefix({F, D}), full) == ActionKindSet{ActionKind::SolveSubques, ActionKind::SolveParent});
    CHECK(legal_next_actions(prefix({F, SP}), full) == ActionKindSet{ActionKind::Summarize, ActionKind::Verify});
    CHECK(legal_next_actions(prefix({F, SP, VP}), full) == ActionKindSet{ActionKind::Summarize});
    CHECK(legal_next_actions(prefix({F, SP, VF}), full) == ActionKindSet{ActionKind::Backtrack});
    CHECK(legal_next_actions(prefix({F, D, SS(1), VP}), full) ==
          ActionKindSet{ActionKind::SolveSubques, ActionKind::SolveParent});
    // back at Formalize with no Decompose used yet
    CHECK(legal_next_actions(prefix({F, SP, VF, BT(1)}), full) ==
          ActionKindSet{ActionKind::Decompose, ActionKind::SolveParent});
    CHECK(legal_next_actions(prefix({F, D, SS(1), VF, BT(2)}), full) ==
          ActionKindSet{ActionKind::SolveSubques, ActionKind::SolveParent});
}

TEST_CASE("legal_next_actions: malformed prefixes") {
    auto full = TransitionRules::full();
    auto gap = prefix({F, SP});
    gap.states[2].index = 5;
    CHECK_THROWS_AS((void)legal_next_actions(gap, full), MalformedPrefix);
    CHECK_THROWS_AS((void)legal_next_actions(prefix({SP}), full), MalformedPrefix);
    CHECK_THROWS_AS((void)legal_next_actions(prefix({F, SP, VF}), TransitionRules::stage1()), MalformedPrefix);
    CHECK_THROWS_AS((void)legal_next_actions(prefix({F, SP, VF, BT(0)}), full), MalformedPrefix);
}

TEST_CASE("legal_next_actions: nothing fits beyond max_states") {
    TransitionRules tight{true, 10, 3};
    CHECK(legal_next_actions(prefix({F, SP}), tight) == ActionKindSet{ActionKind::Summarize, ActionKind::Verify});
    CHECK(legal_next_actions(prefix({F, SP, VP}), tight).empty());
}

TEST_CASE("validate: documented examples") {
    auto full = TransitionRules::full();
    CHECK(validate(actions({F, D, SS(1), SS(2), SP, SUM}), full).valid);
    CHECK(only_violation(validate(actions({SUM}), full), RuleCode::PrematureSummarize, 1));
    CHECK(validate(actions({F, SP, VF, BT(1), SP, VP, SUM}), full).valid);

    auto staged = validate(actions({F, SP, VP, SUM}), TransitionRules::stage1());
    CHECK_FALSE(staged.valid);
    CHECK(staged.has(RuleCode::ActionNotInStageSet));
}

TEST_CASE("validate: named rule violations") {
    auto full = TransitionRules::full();
    CHECK(only_violation(validate(actions({SP, SUM}), full), RuleCode::MissingFormalize, 1));
    CHECK(only_violation(validate(actions({F, D, SS(1), SUM}), full), RuleCode::PrematureSummarize, 4));
    CHECK(only_violation(validate(actions({F, SS(1), SP, SUM}), full), RuleCode::SubquestionWithoutDecompose, 2));
    CHECK(only_violation(validate(actions({F, D, SS(3), SP, SUM}), full), RuleCode::SubquestionOutOfRange, 3));
    CHECK(only_violation(validate(actions({F, SP, VF, SP, SUM}), full), RuleCode::BacktrackRequired, 4));
    CHECK(only_violation(validate(actions({F, SP, VP, VP, SUM}), full), RuleCode::IllegalTransition, 4));
    CHECK(only_violation(validate(actions({F, SP}), full), RuleCode::MissingSummarize, 2));
    CHECK(!validate(actions({F, SP, SUM, SUM}), full).valid);
    CHECK(validate(actions({F, SP, SUM, SUM}), full).has(RuleCode::ActionAfterSummarize));

    auto bad_target = validate(actions({F, SP, VF, BT(0), F, SP, SUM}), full);
    CHECK(bad_target.has(RuleCode::BadBacktrackTarget));
}

TEST_CASE("validate: backtrack targets the last correct state") {
    auto full = TransitionRules::full();
    // passed check on subquestion 1 is the checkpoint
    CHECK(validate(actions({F, D, SS(1), VP, SS(2), VF, BT(4), SS(2), SP, SUM}), full).valid);
    // jumping past a passing Verify to an earlier state is forbidden
    CHECK(validate(actions({F, D, SS(1), VP, SS(2), VF, BT(2), SS(1), SP, SUM}), full)
              .has(RuleCode::BadBacktrackTarget));
    // without any passing Verify the Decompose state is the last correct one
    CHECK(validate(actions({F, D, SS(1), VF, BT(2), SS(1), SP, SUM}), full).valid);
    // a second failure after the first backtrack returns to the same state
    CHECK(validate(actions({F, SP, VF, BT(1), SP, VF, BT(1), SP, SUM}), full).valid);
    // abandoned checkpoints stay abandoned
    CHECK(validate(actions({F, SP, VF, BT(1), D, SS(1), VP, SP, VF, BT(7), SP, SUM}), full).valid);
}

TEST_CASE("validate: one Decompose per trace") {
    auto full = TransitionRules::full();
    auto v = validate(actions({F, D, SP, VF, BT(2), SP, SUM}), full);
    CHECK(v.valid);
    CHECK(validate(actions({F, SP, VF, BT(1), D, SS(1), SP, SUM}), full).valid);
    CHECK(only_violation(validate(actions({F, D, D, SP, SUM}), full), RuleCode::DuplicateDecompose, 3));
    CHECK(only_violation(validate(actions({F, D, SS(1), D, SP, SUM}), full), RuleCode::DuplicateDecompose, 4));
}

TEST_CASE("validate: subquestion count comes from the Decompose block") {
    auto full = TransitionRules::full();
    auto t = build_trace("Q", std::vector<Step>{{F, "x"}, {D, "We need:\n1. a\n2. b\n3. c"}, {SS(3), "c"}, {SP, "p"},
                                                {SUM, "#### 1"}});
    CHECK(validate(t, full).valid);
    t.states[3].action = SS(4);
    CHECK(validate(t, full).has(RuleCode::SubquestionOutOfRange));

    // unnumbered decomposition falls back to max_subquestions
    auto u = build_trace("Q", std::vector<Step>{{F, "x"}, {D, "split"}, {SS(2), "b"}, {SP, "p"}, {SUM, "#### 1"}});
    CHECK(validate(u, TransitionRules{true, 2, 64}).valid);
    CHECK(validate(u, TransitionRules{true, 1, 64}).has(RuleCode::SubquestionOutOfRange));

    CHECK(count_enumerated_items("1. a\n 2. b\n3) c\nx. d") == 2);
    CHECK_FALSE(count_enumerated_items("no list").has_value());
}

TEST_CASE("validate: structural problems") {
    auto full = TransitionRules::full();
    CHECK(validate(actions({F, SP, SUM}), TransitionRules{true, 10, 3}).valid);
    CHECK(validate(actions({F, SP, VP, SUM}), TransitionRules{true, 10, 3}).has(RuleCode::TraceTooLong));

    auto empty = actions({F, SP, SUM});
    empty.states[2].content = "  ";
    CHECK(only_violation(validate(empty, full), RuleCode::EmptyContent, 2));

    auto gap = actions({F, SP, SUM});
    gap.states[1].index = 7;
    CHECK(validate(gap, full).has(RuleCode::MalformedStructure));

    CHECK(validate(Trace{}, full).has(RuleCode::MalformedStructure));
    CHECK(validate(question_only(), full).has(RuleCode::MissingSummarize));
    CHECK_THROWS_AS((void)validate(question_only(), TransitionRules{true, 10, 2}), std::invalid_argument);
}

TEST_CASE("build_trace") {
    auto t = build_trace("Q", std::vector<Step>{{F, "let x=..."}, {SP, "x=4"}, {SUM, "#### 4"}});
    CHECK(t.states.size() == 4);
    CHECK(t.states[0].content == "Q");
    CHECK_FALSE(t.states[0].action.has_value());
    for (std::size_t i = 0; i < t.states.size(); ++i) CHECK(t.states[i].index == i);
    REQUIRE(t.final_answer.has_value());
    CHECK(t.final_answer->canonical() == "4");

    auto u = build_trace("Q", std::vector<Step>{{F, "a"}, {SP, "b"}, {SUM, "so #### 72"}});
    CHECK(u.final_answer->canonical() == "72");

    CHECK_THROWS_AS((void)build_trace("Q", std::vector<Step>{}), EmptySteps);
}

TEST_CASE("validate agrees with the brute-force oracle up to 5 actions") {
    for (const auto& rules : {TransitionRules{true, 2, 64}, TransitionRules{false, 2, 64}, TransitionRules{true, 2, 4}}) {
        std::size_t seen = 0;
        std::size_t disagreements = 0;
        enumerate::all_sequences(5, [&](const Trace& t) {
            ++seen;
            if (validate(t, rules).valid != oracle::valid(t, rules)) ++disagreements;
        });
        CHECK(seen == 11 + 11 * 12 + 11 * 12 * 13 + 11 * 12 * 13 * 14 + 11 * 12 * 13 * 14 * 15);
        CHECK(disagreements == 0);
    }
}

TEST_CASE("legal_next_actions matches the oracle on every legal prefix up to 5 actions") {
    const TransitionRules rules{true, 2, 64};
    std::size_t prefixes = 0;
    std::size_t disagreements = 0;
    enumerate::all_sequences(5, [&](const Trace& t) {
        oracle::Checker c(t, rules);
        if (!c.prefix_ok(t.action_count()) || t.has_summarize()) return;
        ++prefixes;
        if (legal_next_actions(t, rules) != oracle::legal_after(t, rules)) ++disagreements;
    });
    CHECK(prefixes > 50);
    CHECK(disagreements == 0);
}

TEST_CASE("soundness: every step of a valid trace is a legal next action") {
    gen::TraceGenerator g(7);
    for (int n = 0; n < 300; ++n) {
        auto rules = n % 2 ? TransitionRules::full() : TransitionRules::stage1();
        Trace t = g.valid_trace(rules);
        REQUIRE(validate(t, rules).valid);
        for (std::size_t i = 1; i < t.states.size(); ++i) {
            Trace p = t;
            p.states.resize(i);
            CHECK(legal_next_actions(p, rules).contains(t.states[i].action->kind()));
        }
        CHECK(validate(t, rules) == validate(t, rules));
    }
}
