#include "stepwise/losses.hpp"

#include "stepwise/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stepwise::losses {

namespace {

void check_beta(const DpoConfig& cfg) {
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) {
        throw std::invalid_argument("beta must be a positive finite number");
    }
}

void check_item(const PreferenceItem& item, std::size_t i) {
    if (item.policy_accepted.values.size() != item.ref_accepted.values.size()) {
        throw std::invalid_argument("item " + std::to_string(i) +
                                    ": policy/reference accepted lengths differ");
    }
    if (item.policy_rejected.values.size() != item.ref_rejected.values.size()) {
        throw std::invalid_argument("item " + std::to_string(i) +
                                    ": policy/reference rejected lengths differ");
    }
}

void check_batch(const PreferenceBatch& batch, const DpoConfig& cfg) {
    check_beta(cfg);
    if (batch.items.empty()) throw EmptyBatch();
    for (std::size_t i = 0; i < batch.items.size(); ++i) check_item(batch.items[i], i);
}

} // namespace

double log_sigmoid(double x) noexcept {
    // log sigmoid(x) = -softplus(-x)
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double sequence_logprob(const TokenLogProbs& seq) {
    if (seq.values.empty()) throw NonFiniteInput("token log-prob sequence is empty");
    double total = 0.0;
    for (std::size_t t = 0; t < seq.values.size(); ++t) {
        double v = seq.values[t];
        if (!std::isfinite(v)) throw NonFiniteInput("token " + std::to_string(t) + " is not finite");
        if (v > 0.0) throw NonFiniteInput("token " + std::to_string(t) + " is a positive log-probability");
        total += v;
    }
    return total;
}

double ntp_loss(const TokenLogProbs& seq) { return -sequence_logprob(seq); }

double dpo_margin(const PreferenceItem& item, const DpoConfig& cfg) {
    check_beta(cfg);
    check_item(item, 0);
    double accepted = sequence_logprob(item.policy_accepted) - sequence_logprob(item.ref_accepted);
    double rejected = sequence_logprob(item.policy_rejected) - sequence_logprob(item.ref_rejected);
    return cfg.beta * accepted - cfg.beta * rejected;
}

double dpo_loss(const PreferenceBatch& batch, const DpoConfig& cfg, const Kernels& k) {
    check_batch(batch, cfg);
    double total = 0.0;
    for (const auto& item : batch.items) total -= k.log_sigmoid(dpo_margin(item, cfg));
    return total / static_cast<double>(batch.items.size());
}

double dpo_loss(const PreferenceBatch& batch, const DpoConfig& cfg) { return dpo_loss(batch, cfg, Kernels{}); }

std::vector<ItemGradient> dpo_grad(const PreferenceBatch& batch, const DpoConfig& cfg, const Kernels& k) {
    check_batch(batch, cfg);
    const double n = static_cast<double>(batch.items.size());
    std::vector<ItemGradient> grads;
    grads.reserve(batch.items.size());
    for (const auto& item : batch.items) {
        // d/dm [-log sigmoid(m)] = -(1 - sigmoid(m)) = -sigmoid(-m)
        const double scale = cfg.beta * k.sigmoid(-dpo_margin(item, cfg)) / n;
        ItemGradient g;
        g.policy_accepted.assign(item.policy_accepted.values.size(), -scale);
        g.policy_rejected.assign(item.policy_rejected.values.size(), scale);
        g.ref_accepted.assign(item.ref_accepted.values.size(), 0.0);
        g.ref_rejected.assign(item.ref_rejected.values.size(), 0.0);
        grads.push_back(std::move(g));
    }
    return grads;
}

std::vector<ItemGradient> dpo_grad(const PreferenceBatch& batch, const DpoConfig& cfg) {
    return dpo_grad(batch, cfg, Kernels{});
}

} // namespace stepwise::losses
