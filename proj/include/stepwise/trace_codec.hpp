#pragma once

#include "stepwise/trace.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stepwise {

// Tagged text: one block per state, each opened by a header line
//
//   [ACTION: Formalize]            [ACTION: Verify -> PASS]
//   [ACTION: SolveSubques 2]       [ACTION: Backtrack -> 3]
//
// followed by content lines up to the next header. Content lines must not
// themselves begin with "[ACTION:".

/// Throws SyntaxError (1-based line of the offending header) or EmptyBlock.
[[nodiscard]] Trace parse_tagged(std::string_view raw, std::string question);

/// Canonical rendering; parse_tagged(serialize_tagged(t), t.question) == t
/// for any trace whose content is already trimmed.
[[nodiscard]] std::string serialize_tagged(const Trace& trace);

/// The header line for one action, without a trailing newline.
[[nodiscard]] std::string render_header(const Action& action);

// JSON record: {"question", "states": [{"index", "action_kind", "verdict"?,
// "subquestion_index"?, "target_index"?, "content"}], "final_answer"}. The
// initial state has "action_kind": null.

[[nodiscard]] nlohmann::json to_record(const Trace& trace);
/// Throws SchemaError on missing, extra or mistyped fields.
[[nodiscard]] Trace from_record(const nlohmann::json& record);

/// Reads a JSONL file into objects; blank lines are skipped. Throws IoError
/// when the file cannot be read and SchemaError (with line number) when a
/// line is not a JSON object.
[[nodiscard]] std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// One compact JSON document per line, "\n"-terminated. Throws IoError.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

} // namespace stepwise
