#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace stepwise {

/// An exact answer value in canonical form: an integer ("1050", "-3") or a
/// reduced fraction with positive denominator ("7/2"). Two answers are equal
/// iff their canonical strings are equal.
class NormalizedAnswer {
  public:
    /// Parses a canonical string. Throws Unparseable if `canonical` is not
    /// already in canonical form.
    static NormalizedAnswer from_canonical(std::string_view canonical);

    [[nodiscard]] const std::string& canonical() const noexcept { return canonical_; }
    [[nodiscard]] bool is_integer() const noexcept;

    friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;
    friend auto operator<=>(const NormalizedAnswer&, const NormalizedAnswer&) = default;

  private:
    friend NormalizedAnswer normalize_answer(std::string_view raw);
    explicit NormalizedAnswer(std::string canonical) : canonical_(std::move(canonical)) {}
    std::string canonical_;
};

/// Normalizes a free-form answer string: strips commas, currency symbols,
/// trailing periods and trailing unit words, then parses integers, decimals
/// and "a/b" fractions exactly. Throws Unparseable.
[[nodiscard]] NormalizedAnswer normalize_answer(std::string_view raw);

/// Pulls the final answer out of a model prediction.
///
/// The last `#### <value>` marker wins. Without a marker, the last
/// number-like token is used, searched in the final `[ACTION: Summarize]`
/// block when the text is a tagged trace and in the whole text otherwise.
/// Throws NoFinalAnswer when nothing numeric is found.
[[nodiscard]] NormalizedAnswer extract_final_answer(std::string_view prediction);

/// extract_final_answer, with absence instead of an exception.
[[nodiscard]] std::optional<NormalizedAnswer> try_extract_final_answer(std::string_view prediction);

} // namespace stepwise
