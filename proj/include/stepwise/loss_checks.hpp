#pragma once

#include "stepwise/losses.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stepwise::losses {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Closed-form cases, loss properties and a central finite-difference check
/// of dpo_grad over random batches (margins up to +-50 included), run
/// against the given kernels.
[[nodiscard]] std::vector<CheckResult> run_loss_checks(const Kernels& kernels = {}, std::uint64_t seed = 20241106);

/// Random batch in which every token log-prob is <= -1e-3. When
/// `target_margin` is set, item 0 is shifted to have exactly that margin.
[[nodiscard]] PreferenceBatch random_batch(std::uint64_t seed, std::size_t items, double beta,
                                           std::optional<double> target_margin = std::nullopt);

} // namespace stepwise::losses
