#pragma once

#include "stepwise/answer.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stepwise::eval {

/// Majority vote over extracted answers. Absent entries do not vote; ties go
/// to the answer seen first. Throws std::invalid_argument on an empty list
/// and AllExtractionsFailed when every entry is absent.
[[nodiscard]] NormalizedAnswer maj_at_n(std::span<const std::optional<NormalizedAnswer>> answers);

struct EvalRecord {
    std::string problem_id;
    NormalizedAnswer gold;
    std::vector<std::string> samples;
    std::vector<std::optional<NormalizedAnswer>> extracted;
    std::optional<NormalizedAnswer> vote;
    bool correct = false;
};

/// Extracts every sample and votes. A record whose samples all fail
/// extraction has no vote and is scored incorrect.
[[nodiscard]] EvalRecord make_record(std::string problem_id, NormalizedAnswer gold,
                                     std::vector<std::string> samples);

/// Running (correct, total) pair; partial tallies merge by addition.
struct Tally {
    std::size_t correct = 0;
    std::size_t total = 0;

    Tally& operator+=(const Tally& other) noexcept {
        correct += other.correct;
        total += other.total;
        return *this;
    }
    [[nodiscard]] double accuracy() const;
};

[[nodiscard]] Tally tally(std::span<const EvalRecord> records) noexcept;

/// Fraction of correct records. Throws EmptyInput.
[[nodiscard]] double score(std::span<const EvalRecord> records);

// --- files -----------------------------------------------------------------

struct Prediction {
    std::string problem_id;
    std::vector<std::string> samples;
};

/// {problem_id, samples: [string]} per line. Throws IoError / SchemaError.
[[nodiscard]] std::vector<Prediction> load_predictions(const std::filesystem::path& path);
/// {problem_id, answer} per line; answers are normalized on load.
[[nodiscard]] std::map<std::string, NormalizedAnswer> load_gold(const std::filesystem::path& path);

class InsufficientSamples : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Builds maj@n records from the first `n` samples of each prediction.
/// Throws SchemaError for predictions without gold and InsufficientSamples
/// when a prediction holds fewer than `n` samples.
[[nodiscard]] std::vector<EvalRecord> build_records(const std::vector<Prediction>& predictions,
                                                    const std::map<std::string, NormalizedAnswer>& gold,
                                                    std::size_t n);

// --- published reference numbers ------------------------------------------

struct ReferenceEntry {
    std::string_view benchmark;
    std::string_view model;
    double accuracy_pct;
};

/// Published maj@1 accuracies (percent) of state-transition reasoners
/// fine-tuned from four base models. Display only.
struct ReferenceTable {
    std::span<const ReferenceEntry> entries;
    std::string_view citation;
    std::string_view protocol;

    [[nodiscard]] static ReferenceTable published();
};

/// Measured accuracies (fractions in [0,1]) keyed by run name. A run named
/// "<benchmark>/<model>" is shown on the matching reference row, and a bare
/// "<model>" counts as GSM8K. Other runs get rows of their own.
[[nodiscard]] std::string render_report(const std::map<std::string, double>& results,
                                        const ReferenceTable& refs);

} // namespace stepwise::eval
