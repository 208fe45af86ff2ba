#pragma once

#include "stepwise/trace.hpp"

#include <initializer_list>
#include <string>
#include <vector>

namespace build {

/// Trace from actions, with placeholder content per kind.
inline stepwise::Trace actions(std::initializer_list<stepwise::Action> acts, std::string question = "Q") {
    std::vector<stepwise::Step> steps;
    for (const auto& a : acts) {
        std::string content;
        switch (a.kind()) {
        case stepwise::ActionKind::Decompose: content = "1. first\n2. second"; break;
        case stepwise::ActionKind::Summarize: content = "#### 4"; break;
        default: content = "work"; break;
        }
        steps.push_back({a, content});
    }
    return stepwise::build_trace(std::move(question), steps);
}

} // namespace build
