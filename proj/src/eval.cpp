#include "stepwise/eval.hpp"

#include "stepwise/errors.hpp"
#include "stepwise/trace_codec.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace stepwise::eval {

NormalizedAnswer maj_at_n(std::span<const std::optional<NormalizedAnswer>> answers) {
    if (answers.empty()) throw std::invalid_argument("maj_at_n: empty answer list");

    struct Bucket {
        std::size_t count = 0;
        std::size_t first_seen = 0;
    };
    std::unordered_map<std::string, Bucket> buckets;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        if (!answers[i]) continue;
        auto [it, inserted] = buckets.try_emplace(answers[i]->canonical(), Bucket{0, i});
        ++it->second.count;
    }
    if (buckets.empty()) throw AllExtractionsFailed();

    const std::optional<NormalizedAnswer>* best = nullptr;
    Bucket best_bucket;
    for (const auto& [_, bucket] : buckets) {
        if (!best || bucket.count > best_bucket.count ||
            (bucket.count == best_bucket.count && bucket.first_seen < best_bucket.first_seen)) {
            best = &answers[bucket.first_seen];
            best_bucket = bucket;
        }
    }
    return **best;
}

EvalRecord make_record(std::string problem_id, NormalizedAnswer gold, std::vector<std::string> samples) {
    EvalRecord rec{std::move(problem_id), std::move(gold), std::move(samples), {}, std::nullopt, false};
    rec.extracted.reserve(rec.samples.size());
    for (const auto& s : rec.samples) rec.extracted.push_back(try_extract_final_answer(s));
    if (!rec.extracted.empty()) {
        try {
            rec.vote = maj_at_n(rec.extracted);
        } catch (const AllExtractionsFailed&) {
        }
    }
    rec.correct = rec.vote.has_value() && *rec.vote == rec.gold;
    return rec;
}

double Tally::accuracy() const {
    if (total == 0) throw EmptyInput("no records to score");
    return static_cast<double>(correct) / static_cast<double>(total);
}

Tally tally(std::span<const EvalRecord> records) noexcept {
    Tally t;
    for (const auto& r : records) {
        t.correct += r.correct ? 1 : 0;
        ++t.total;
    }
    return t;
}

double score(std::span<const EvalRecord> records) { return tally(records).accuracy(); }

namespace {

std::string string_field(const nlohmann::json& row, const char* key, const std::string& where) {
    auto it = row.find(key);
    if (it == row.end()) throw SchemaError(where + ": missing field '" + key + "'");
    if (it->is_string()) return it->get<std::string>();
    // Numeric ids and answers are common in benchmark dumps.
    if (it->is_number()) return it->dump();
    throw SchemaError(where + ": '" + key + "' must be a string");
}

} // namespace

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::vector<Prediction> out;
    auto rows = read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = path.string() + " record " + std::to_string(i + 1);
        Prediction p;
        p.problem_id = string_field(rows[i], "problem_id", where);
        auto it = rows[i].find("samples");
        if (it == rows[i].end() || !it->is_array()) throw SchemaError(where + ": 'samples' must be an array");
        for (const auto& s : *it) {
            if (!s.is_string()) throw SchemaError(where + ": samples must be strings");
            p.samples.push_back(s.get<std::string>());
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::map<std::string, NormalizedAnswer> load_gold(const std::filesystem::path& path) {
    std::map<std::string, NormalizedAnswer> out;
    auto rows = read_jsonl(path);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string where = path.string() + " record " + std::to_string(i + 1);
        auto id = string_field(rows[i], "problem_id", where);
        auto raw = string_field(rows[i], "answer", where);
        try {
            auto [_, inserted] = out.emplace(id, normalize_answer(raw));
            if (!inserted) throw SchemaError(where + ": duplicate problem_id '" + id + "'");
        } catch (const Unparseable& e) {
            throw SchemaError(where + ": " + e.what());
        }
    }
    return out;
}

std::vector<EvalRecord> build_records(const std::vector<Prediction>& predictions,
                                      const std::map<std::string, NormalizedAnswer>& gold, std::size_t n) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    std::vector<EvalRecord> records;
    records.reserve(predictions.size());
    for (const auto& p : predictions) {
        auto g = gold.find(p.problem_id);
        if (g == gold.end()) throw SchemaError("no gold answer for problem '" + p.problem_id + "'");
        if (p.samples.size() < n) {
            throw InsufficientSamples(fmt::format("problem '{}' has {} samples, maj@{} needs {}", p.problem_id,
                                                  p.samples.size(), n, n));
        }
        records.push_back(make_record(p.problem_id, g->second,
                                      std::vector<std::string>(p.samples.begin(), p.samples.begin() + n)));
    }
    return records;
}

namespace {

constexpr std::array<ReferenceEntry, 8> kPublished = {{
    {"GSM8K", "Mistral-7B", 80.52},
    {"GSM8K", "LLaMA3-8B", 86.81},
    {"GSM8K", "LLaMA3.1-8B", 90.22},
    {"GSM8K", "Phi3-mini-4k", 90.52},
    {"GSM-Hard", "Mistral-7B", 30.86},
    {"GSM-Hard", "LLaMA3-8B", 31.01},
    {"GSM-Hard", "LLaMA3.1-8B", 35.18},
    {"GSM-Hard", "Phi3-mini-4k", 48.52},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::pair<std::string, std::string> split_run(const std::string& run) {
    auto slash = run.find('/');
    if (slash == std::string::npos) return {"gsm8k", lower(run)};
    return {lower(run.substr(0, slash)), lower(run.substr(slash + 1))};
}

std::string pct(double fraction) { return fmt::format("{:.2f}", fraction * 100.0); }

} // namespace

ReferenceTable ReferenceTable::published() {
    return ReferenceTable{kPublished, "published state-transition reasoner results", "maj@1, exact match"};
}

std::string render_report(const std::map<std::string, double>& results, const ReferenceTable& refs) {
    std::set<std::string> matched;
    std::vector<std::array<std::string, 5>> rows;
    for (const auto& e : refs.entries) {
        std::string measured = "--";
        std::string run = "--";
        for (const auto& [name, acc] : results) {
            auto [bench, model] = split_run(name);
            if (bench == lower(e.benchmark) && model == lower(e.model)) {
                measured = pct(acc);
                run = name;
                matched.insert(name);
                break;
            }
        }
        rows.push_back({std::string(e.benchmark), std::string(e.model), fmt::format("{:.2f} [ref]", e.accuracy_pct),
                        measured, run});
    }
    for (const auto& [name, acc] : results) {
        if (matched.contains(name)) continue;
        auto slash = name.find('/');
        std::string bench = slash == std::string::npos ? "--" : name.substr(0, slash);
        std::string model = slash == std::string::npos ? name : name.substr(slash + 1);
        rows.push_back({bench, model, "--", pct(acc), name});
    }

    const std::array<std::string, 5> header = {"benchmark", "model", "reference %", "measured %", "run"};
    std::array<std::size_t, 5> width{};
    for (std::size_t c = 0; c < 5; ++c) {
        width[c] = header[c].size();
        for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
    }
    auto line = [&](const std::array<std::string, 5>& cells) {
        std::string out;
        for (std::size_t c = 0; c < 5; ++c) {
            if (c) out += " | ";
            out += fmt::format("{:<{}}", cells[c], width[c]);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + '\n';
    };

    std::string out = line(header);
    std::string rule;
    for (std::size_t c = 0; c < 5; ++c) {
        if (c) rule += "-+-";
        rule += std::string(width[c], '-');
    }
    out += rule + '\n';
    for (const auto& r : rows) out += line(r);
    out += fmt::format("[ref] {} ({}); shown for comparison, not reproduced.\n", refs.citation, refs.protocol);
    return out;
}

} // namespace stepwise::eval
