#include "stepwise/answer.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/eval.hpp"
#include "stepwise/loss_checks.hpp"
#include "stepwise/losses.hpp"
#include "stepwise/state_space.hpp"
#include "stepwise/trace_codec.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

namespace py = pybind11;
using namespace stepwise;

// Traces cross the boundary as JSON record text; the Python package turns
// them into dicts.
namespace {

Trace trace_from_json(const std::string& record) {
    auto doc = nlohmann::json::parse(record, nullptr, false);
    if (doc.is_discarded()) throw SchemaError("trace record is not valid JSON");
    return from_record(doc);
}

TransitionRules make_rules(int stage, std::size_t max_subquestions, std::size_t max_states) {
    if (stage != 1 && stage != 2) throw std::invalid_argument("stage must be 1 or 2");
    TransitionRules rules{stage == 2, max_subquestions, max_states};
    rules.check();
    return rules;
}

losses::TokenLogProbs tokens(std::vector<double> v) { return {std::move(v)}; }

losses::PreferenceBatch make_batch(const std::vector<std::array<std::vector<double>, 4>>& items) {
    losses::PreferenceBatch batch;
    for (const auto& it : items) {
        batch.items.push_back({tokens(it[0]), tokens(it[1]), tokens(it[2]), tokens(it[3])});
    }
    return batch;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the stepwise toolkit.";

    auto base = py::register_exception<Error>(m, "StepwiseError", PyExc_ValueError);
    py::register_exception<MalformedPrefix>(m, "MalformedPrefix", base.ptr());
    py::register_exception<SyntaxError>(m, "TraceSyntaxError", base.ptr());
    py::register_exception<EmptyBlock>(m, "EmptyBlock", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<Unparseable>(m, "Unparseable", base.ptr());
    py::register_exception<NoFinalAnswer>(m, "NoFinalAnswer", base.ptr());
    py::register_exception<AllExtractionsFailed>(m, "AllExtractionsFailed", base.ptr());
    py::register_exception<NonFiniteInput>(m, "NonFiniteInput", base.ptr());
    py::register_exception<EmptyBatch>(m, "EmptyBatch", base.ptr());

    const auto rule_args = std::make_tuple(py::arg("stage") = 2, py::arg("max_subquestions") = 10,
                                           py::arg("max_states") = 64);

    m.def(
        "validate",
        [](const std::string& record, int stage, std::size_t max_subquestions, std::size_t max_states) {
            auto verdict = validate(trace_from_json(record), make_rules(stage, max_subquestions, max_states));
            std::vector<std::tuple<std::size_t, std::string, std::string>> out;
            for (const auto& v : verdict.violations) {
                out.emplace_back(v.state_index, std::string(to_string(v.code)), v.message);
            }
            return out;
        },
        py::arg("record"), std::get<0>(rule_args), std::get<1>(rule_args), std::get<2>(rule_args),
        "Violations (state_index, code, message) of a trace record; empty when valid.");

    m.def(
        "legal_next_actions",
        [](const std::string& record, int stage, std::size_t max_subquestions, std::size_t max_states) {
            std::vector<std::string> out;
            auto set = legal_next_actions(trace_from_json(record), make_rules(stage, max_subquestions, max_states));
            for (auto k : set.to_vector()) out.emplace_back(to_string(k));
            return out;
        },
        py::arg("record"), std::get<0>(rule_args), std::get<1>(rule_args), std::get<2>(rule_args));

    m.def(
        "parse_tagged",
        [](const std::string& raw, const std::string& question) { return to_record(parse_tagged(raw, question)).dump(); },
        py::arg("raw"), py::arg("question"));
    m.def(
        "serialize_tagged", [](const std::string& record) { return serialize_tagged(trace_from_json(record)); },
        py::arg("record"));
    m.def(
        "canonical_record", [](const std::string& record) { return to_record(trace_from_json(record)).dump(); },
        py::arg("record"));

    m.def(
        "normalize_answer", [](const std::string& raw) { return normalize_answer(raw).canonical(); },
        py::arg("raw"));
    m.def(
        "extract_final_answer",
        [](const std::string& prediction) { return extract_final_answer(prediction).canonical(); },
        py::arg("prediction"));
    m.def(
        "maj_at_n",
        [](const std::vector<std::optional<std::string>>& answers) {
            std::vector<std::optional<NormalizedAnswer>> parsed;
            for (const auto& a : answers) {
                parsed.push_back(a ? std::optional(NormalizedAnswer::from_canonical(*a)) : std::nullopt);
            }
            return eval::maj_at_n(parsed).canonical();
        },
        py::arg("answers"), "Majority over canonical answers; None entries do not vote.");
    m.def(
        "score",
        [](const std::vector<std::pair<std::string, std::vector<std::string>>>& items) {
            std::vector<eval::EvalRecord> records;
            for (const auto& [gold, samples] : items) {
                records.push_back(eval::make_record("", normalize_answer(gold), samples));
            }
            return eval::score(records);
        },
        py::arg("items"), "Accuracy of majority votes over (gold answer, samples) pairs.");
    m.def(
        "render_report",
        [](const std::map<std::string, double>& results) {
            return eval::render_report(results, eval::ReferenceTable::published());
        },
        py::arg("results"));

    m.def(
        "ntp_loss", [](std::vector<double> logprobs) { return losses::ntp_loss(tokens(std::move(logprobs))); },
        py::arg("logprobs"));
    m.def(
        "dpo_loss",
        [](const std::vector<std::array<std::vector<double>, 4>>& items, double beta) {
            return losses::dpo_loss(make_batch(items), {beta});
        },
        py::arg("items"), py::arg("beta") = 0.1,
        "items: (policy_accepted, policy_rejected, ref_accepted, ref_rejected) token log-probs.");
    m.def(
        "dpo_grad",
        [](const std::vector<std::array<std::vector<double>, 4>>& items, double beta) {
            std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
            for (auto& g : losses::dpo_grad(make_batch(items), {beta})) {
                out.emplace_back(std::move(g.policy_accepted), std::move(g.policy_rejected));
            }
            return out;
        },
        py::arg("items"), py::arg("beta") = 0.1,
        "Per item: gradients w.r.t. the policy accepted and rejected token log-probs.");
    m.def("run_loss_checks", [] {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& r : losses::run_loss_checks()) out.emplace_back(r.name, r.passed, r.detail);
        return out;
    });
}
