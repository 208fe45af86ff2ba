#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stepwise::losses {

/// Per-token log-probabilities log P(y_t | y_<t) of one target sequence.
struct TokenLogProbs {
    std::vector<double> values;
};

/// Token log-probabilities of the accepted and rejected solutions under the
/// policy being trained and under the frozen reference model.
struct PreferenceItem {
    TokenLogProbs policy_accepted;
    TokenLogProbs policy_rejected;
    TokenLogProbs ref_accepted;
    TokenLogProbs ref_rejected;
};

struct PreferenceBatch {
    std::vector<PreferenceItem> items;
};

struct DpoConfig {
    double beta = 0.1;
};

/// Sum of log-probabilities; validates every entry is finite and <= 0.
/// Throws NonFiniteInput (also used for positive entries and empty input).
[[nodiscard]] double sequence_logprob(const TokenLogProbs& seq);

/// Next-token prediction loss: -sum_t log P(y_t | y_<t).
[[nodiscard]] double ntp_loss(const TokenLogProbs& seq);

/// beta * ((sum policy_accepted - sum ref_accepted) - (sum policy_rejected - sum ref_rejected))
[[nodiscard]] double dpo_margin(const PreferenceItem& item, const DpoConfig& cfg);

/// Mean over items of -log sigmoid(margin). Throws EmptyBatch,
/// NonFiniteInput, or std::invalid_argument for beta <= 0 or mismatched
/// policy/reference lengths.
[[nodiscard]] double dpo_loss(const PreferenceBatch& batch, const DpoConfig& cfg);

struct ItemGradient {
    std::vector<double> policy_accepted;
    std::vector<double> policy_rejected;
    // The reference model is frozen; these are always zero.
    std::vector<double> ref_accepted;
    std::vector<double> ref_rejected;
};

/// Analytic gradient of dpo_loss with respect to every token log-prob.
[[nodiscard]] std::vector<ItemGradient> dpo_grad(const PreferenceBatch& batch, const DpoConfig& cfg);

/// Numerically stable scalar kernels.
[[nodiscard]] double log_sigmoid(double x) noexcept;
[[nodiscard]] double sigmoid(double x) noexcept;

/// The scalar kernels dpo_loss/dpo_grad are built from. Swappable so the
/// self-check harness can be run against a deliberately broken kernel.
struct Kernels {
    double (*log_sigmoid)(double) = &stepwise::losses::log_sigmoid;
    double (*sigmoid)(double) = &stepwise::losses::sigmoid;
};

[[nodiscard]] double dpo_loss(const PreferenceBatch& batch, const DpoConfig& cfg, const Kernels& k);
[[nodiscard]] std::vector<ItemGradient> dpo_grad(const PreferenceBatch& batch, const DpoConfig& cfg,
                                                 const Kernels& k);

} // namespace stepwise::losses
