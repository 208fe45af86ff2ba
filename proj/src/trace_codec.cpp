#include "stepwise/trace_codec.hpp"

#include "stepwise/errors.hpp"
#include "text_util.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace stepwise {

namespace {

using nlohmann::json;

constexpr std::string_view kOpen = "[ACTION: ";
constexpr std::string_view kHeaderStart = "[ACTION:";

std::optional<std::size_t> parse_index(std::string_view s) noexcept {
    if (s.empty() || s.size() > 18) return std::nullopt;
    std::size_t value = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

Action parse_header(std::string_view line, std::size_t line_no) {
    if (!line.starts_with(kOpen) || !line.ends_with("]")) {
        throw SyntaxError(line_no, "malformed action header");
    }
    std::string_view body = line.substr(kOpen.size(), line.size() - kOpen.size() - 1);

    if (body == "Verify -> PASS") return Action::verify(Verdict::Pass);
    if (body == "Verify -> FAIL") return Action::verify(Verdict::Fail);
    if (body.starts_with("Backtrack -> ")) {
        auto target = parse_index(body.substr(13));
        if (!target) throw SyntaxError(line_no, "Backtrack needs a non-negative target index");
        return Action::backtrack(*target);
    }
    if (body.starts_with("SolveSubques ")) {
        auto k = parse_index(body.substr(13));
        if (!k || *k == 0) throw SyntaxError(line_no, "SolveSubques needs a positive subquestion index");
        return Action::solve_subques(*k);
    }
    auto kind = action_kind_from_string(body);
    if (!kind) throw SyntaxError(line_no, "unknown action '" + std::string(body) + "'");
    switch (*kind) {
    case ActionKind::Verify:
        throw SyntaxError(line_no, "Verify needs a verdict: '-> PASS' or '-> FAIL'");
    case ActionKind::Backtrack:
        throw SyntaxError(line_no, "Backtrack needs a target: '-> <index>'");
    case ActionKind::SolveSubques:
        throw SyntaxError(line_no, "SolveSubques needs a subquestion index");
    default:
        return Action::simple(*kind);
    }
}

[[noreturn]] void schema(const std::string& message) { throw SchemaError(message); }

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) schema(where + ": missing field '" + key + "'");
    return *it;
}

std::size_t require_index(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        schema(where + ": '" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) schema(where + ": unexpected field '" + key + "'");
    }
}

StateNode state_from_record(const json& rec, std::size_t position) {
    const std::string where = "states[" + std::to_string(position) + "]";
    if (!rec.is_object()) schema(where + ": must be an object");
    reject_unknown(rec, {"index", "action_kind", "verdict", "subquestion_index", "target_index", "content"},
                   where);

    StateNode node;
    node.index = require_index(rec, "index", where);
    const json& content = require(rec, "content", where);
    if (!content.is_string()) schema(where + ": 'content' must be a string");
    node.content = content.get<std::string>();

    const json& kind_field = require(rec, "action_kind", where);
    const bool has_verdict = rec.contains("verdict");
    const bool has_subq = rec.contains("subquestion_index");
    const bool has_target = rec.contains("target_index");

    if (kind_field.is_null()) {
        if (has_verdict || has_subq || has_target) schema(where + ": payload fields without an action");
        return node;
    }
    if (!kind_field.is_string()) schema(where + ": 'action_kind' must be a string or null");
    auto kind = action_kind_from_string(kind_field.get<std::string>());
    if (!kind) schema(where + ": unknown action_kind '" + kind_field.get<std::string>() + "'");

    if (has_verdict != (*kind == ActionKind::Verify)) {
        schema(where + ": 'verdict' is present iff action_kind is Verify");
    }
    if (has_subq != (*kind == ActionKind::SolveSubques)) {
        schema(where + ": 'subquestion_index' is present iff action_kind is SolveSubques");
    }
    if (has_target != (*kind == ActionKind::Backtrack)) {
        schema(where + ": 'target_index' is present iff action_kind is Backtrack");
    }

    switch (*kind) {
    case ActionKind::Verify: {
        const json& v = rec.at("verdict");
        if (v == "PASS") {
            node.action = Action::verify(Verdict::Pass);
        } else if (v == "FAIL") {
            node.action = Action::verify(Verdict::Fail);
        } else {
            schema(where + ": 'verdict' must be \"PASS\" or \"FAIL\"");
        }
        break;
    }
    case ActionKind::SolveSubques: {
        auto k = require_index(rec, "subquestion_index", where);
        if (k == 0) schema(where + ": 'subquestion_index' is 1-based");
        node.action = Action::solve_subques(k);
        break;
    }
    case ActionKind::Backtrack:
        node.action = Action::backtrack(require_index(rec, "target_index", where));
        break;
    default:
        node.action = Action::simple(*kind);
    }
    return node;
}

} // namespace

std::string render_header(const Action& action) {
    std::string out(kOpen);
    out += to_string(action.kind());
    switch (action.kind()) {
    case ActionKind::Verify:
        out += " -> ";
        out += to_string(*action.verdict());
        break;
    case ActionKind::Backtrack:
        out += " -> " + std::to_string(*action.target_index());
        break;
    case ActionKind::SolveSubques:
        out += " " + std::to_string(*action.subquestion_index());
        break;
    default:
        break;
    }
    out += ']';
    return out;
}

Trace parse_tagged(std::string_view raw, std::string question) {
    Trace trace;
    trace.states.push_back(StateNode{0, std::nullopt, question});
    trace.question = std::move(question);

    std::optional<Action> pending;
    std::size_t header_line = 0;
    std::vector<std::string_view> body;

    auto flush = [&] {
        if (!pending) return;
        std::string content;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (i) content += '\n';
            content += body[i];
        }
        auto trimmed = detail::trim(content);
        if (trimmed.empty()) throw EmptyBlock(header_line);
        trace.states.push_back(StateNode{trace.states.size(), *pending, std::string(trimmed)});
        body.clear();
    };

    auto lines = detail::split_lines(raw);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (line.ends_with('\r')) line.remove_suffix(1);
        const std::size_t line_no = i + 1;
        if (line.starts_with(kHeaderStart)) {
            flush();
            pending = parse_header(line, line_no);
            header_line = line_no;
        } else if (pending) {
            body.push_back(line);
        } else if (!detail::trim(line).empty()) {
            throw SyntaxError(line_no, "text before the first action header");
        }
    }
    if (!pending) throw SyntaxError(lines.size(), "no action header found");
    flush();

    trace.final_answer = derive_final_answer(trace);
    return trace;
}

std::string serialize_tagged(const Trace& trace) {
    std::string out;
    bool first = true;
    for (const auto& node : trace.states) {
        if (!node.action) continue;
        if (!first) out += '\n';
        first = false;
        out += render_header(*node.action);
        out += '\n';
        out += node.content;
    }
    return out;
}

json to_record(const Trace& trace) {
    json states = json::array();
    for (const auto& node : trace.states) {
        json s = json::object();
        s["index"] = node.index;
        if (node.action) {
            s["action_kind"] = std::string(to_string(node.action->kind()));
            if (auto v = node.action->verdict()) s["verdict"] = std::string(to_string(*v));
            if (auto k = node.action->subquestion_index()) s["subquestion_index"] = *k;
            if (auto t = node.action->target_index()) s["target_index"] = *t;
        } else {
            s["action_kind"] = nullptr;
        }
        s["content"] = node.content;
        states.push_back(std::move(s));
    }
    json rec = json::object();
    rec["question"] = trace.question;
    rec["states"] = std::move(states);
    rec["final_answer"] = trace.final_answer ? json(trace.final_answer->canonical()) : json(nullptr);
    return rec;
}

Trace from_record(const json& record) {
    if (!record.is_object()) schema("trace record must be a JSON object");
    reject_unknown(record, {"question", "states", "final_answer"}, "record");

    Trace trace;
    const json& question = require(record, "question", "record");
    if (!question.is_string()) schema("record: 'question' must be a string");
    trace.question = question.get<std::string>();

    const json& states = require(record, "states", "record");
    if (!states.is_array()) schema("record: 'states' must be an array");
    for (std::size_t i = 0; i < states.size(); ++i) {
        trace.states.push_back(state_from_record(states[i], i));
    }

    const json& answer = require(record, "final_answer", "record");
    if (answer.is_string()) {
        try {
            trace.final_answer = NormalizedAnswer::from_canonical(answer.get<std::string>());
        } catch (const Unparseable& e) {
            schema(std::string("record: 'final_answer': ") + e.what());
        }
    } else if (!answer.is_null()) {
        schema("record: 'final_answer' must be a string or null");
    }
    return trace;
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object()) {
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": not a JSON object");
        }
        rows.push_back(std::move(row));
    }
    if (in.bad()) throw IoError("read failed: " + path.string());
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& row : rows) out << row.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace stepwise
