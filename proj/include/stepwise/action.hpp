#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace stepwise {

/// The seven actions a state-transition reasoner may take.
enum class ActionKind : std::uint8_t {
    Formalize,
    Decompose,
    SolveSubques,
    SolveParent,
    Verify,
    Backtrack,
    Summarize,
};

inline constexpr std::array<ActionKind, 7> kAllActionKinds = {
    ActionKind::Formalize, ActionKind::Decompose, ActionKind::SolveSubques,
    ActionKind::SolveParent, ActionKind::Verify,  ActionKind::Backtrack,
    ActionKind::Summarize,
};

enum class Verdict : std::uint8_t { Pass, Fail };

[[nodiscard]] std::string_view to_string(ActionKind kind) noexcept;
[[nodiscard]] std::optional<ActionKind> action_kind_from_string(std::string_view name) noexcept;
[[nodiscard]] std::string_view to_string(Verdict verdict) noexcept; // "PASS" / "FAIL"

/// An action together with the payload its kind requires. The payload fields
/// are only reachable on the kind that owns them, so an Action can never
/// carry a verdict unless it is a Verify (and likewise for the others).
class Action {
  public:
    static Action formalize() noexcept { return Action(ActionKind::Formalize); }
    static Action decompose() noexcept { return Action(ActionKind::Decompose); }
    /// `index` is 1-based; throws std::invalid_argument on 0.
    static Action solve_subques(std::size_t index);
    static Action solve_parent() noexcept { return Action(ActionKind::SolveParent); }
    static Action verify(Verdict verdict) noexcept;
    static Action backtrack(std::size_t target_index) noexcept;
    static Action summarize() noexcept { return Action(ActionKind::Summarize); }

    /// Builds an action of a kind that carries no payload. Throws
    /// std::invalid_argument for SolveSubques, Verify and Backtrack.
    static Action simple(ActionKind kind);

    [[nodiscard]] ActionKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::optional<Verdict> verdict() const noexcept;
    [[nodiscard]] std::optional<std::size_t> subquestion_index() const noexcept;
    [[nodiscard]] std::optional<std::size_t> target_index() const noexcept;

    [[nodiscard]] bool is_solving() const noexcept {
        return kind_ == ActionKind::SolveSubques || kind_ == ActionKind::SolveParent;
    }

    friend bool operator==(const Action&, const Action&) = default;

  private:
    explicit Action(ActionKind kind, std::size_t payload = 0) noexcept
        : kind_(kind), payload_(payload) {}

    ActionKind kind_;
    // Verdict (0 = Pass, 1 = Fail), subquestion index or backtrack target,
    // depending on kind_. Zero for payload-free kinds.
    std::size_t payload_;
};

/// A small set of action kinds.
class ActionKindSet {
  public:
    constexpr ActionKindSet() noexcept = default;
    constexpr ActionKindSet(std::initializer_list<ActionKind> kinds) noexcept {
        for (auto k : kinds) insert(k);
    }

    constexpr void insert(ActionKind k) noexcept { bits_ |= bit(k); }
    constexpr void erase(ActionKind k) noexcept { bits_ &= static_cast<std::uint8_t>(~bit(k)); }
    [[nodiscard]] constexpr bool contains(ActionKind k) const noexcept { return (bits_ & bit(k)) != 0; }
    [[nodiscard]] constexpr bool empty() const noexcept { return bits_ == 0; }
    [[nodiscard]] std::size_t size() const noexcept;
    [[nodiscard]] std::vector<ActionKind> to_vector() const;

    friend constexpr bool operator==(ActionKindSet, ActionKindSet) = default;

  private:
    static constexpr std::uint8_t bit(ActionKind k) noexcept {
        return static_cast<std::uint8_t>(1U << static_cast<unsigned>(k));
    }
    std::uint8_t bits_ = 0;
};

} // namespace stepwise
