#include "stepwise/loss_checks.hpp"

#include "stepwise/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

namespace stepwise::losses {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kGradTolerance = 1e-5;
constexpr double kExactTolerance = 1e-12;

TokenLogProbs repeat(double v, std::size_t n) { return TokenLogProbs{std::vector<double>(n, v)}; }

PreferenceItem item(TokenLogProbs pa, TokenLogProbs pr, TokenLogProbs ra, TokenLogProbs rr) {
    return PreferenceItem{std::move(pa), std::move(pr), std::move(ra), std::move(rr)};
}

CheckResult close_to(std::string name, double got, double want, double tol) {
    bool ok = std::isfinite(got) && std::abs(got - want) <= tol;
    return {std::move(name), ok, fmt::format("got {:.17g}, want {:.17g} (tol {:g})", got, want, tol)};
}

double relative_error(double a, double b) {
    double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Worst relative error between dpo_grad and central differences. Each item
// contributes loss_i / N to the mean, so the partial derivative of the batch
// loss w.r.t. a token of item i is the derivative of that item's term; it is
// evaluated on the single-item batch to keep tiny terms out of cancellation
// against the other items.
double worst_fd_error(const PreferenceBatch& batch, const DpoConfig& cfg, const Kernels& k) {
    const auto grads = dpo_grad(batch, cfg, k);
    const double n = static_cast<double>(batch.items.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        PreferenceBatch single{{batch.items[i]}};
        auto probe = [&](std::vector<double>& slot, double analytic) {
            const double saved = slot.front();
            slot.front() = saved + kFdStep;
            const double up = dpo_loss(single, cfg, k);
            slot.front() = saved - kFdStep;
            const double down = dpo_loss(single, cfg, k);
            slot.front() = saved;
            worst = std::max(worst, relative_error(analytic, (up - down) / (2.0 * kFdStep) / n));
        };
        auto& it = single.items.front();
        probe(it.policy_accepted.values, grads[i].policy_accepted.front());
        probe(it.policy_rejected.values, grads[i].policy_rejected.front());
    }
    return worst;
}

} // namespace

PreferenceBatch random_batch(std::uint64_t seed, std::size_t items, double beta, std::optional<double> target_margin) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, 8);
    std::uniform_real_distribution<double> lp(-4.0, -1e-3);
    auto seq = [&](std::size_t n) {
        TokenLogProbs s;
        for (std::size_t t = 0; t < n; ++t) s.values.push_back(lp(rng));
        return s;
    };
    PreferenceBatch batch;
    for (std::size_t i = 0; i < items; ++i) {
        auto na = len(rng);
        auto nr = len(rng);
        batch.items.push_back(item(seq(na), seq(nr), seq(na), seq(nr)));
    }
    if (target_margin && !batch.items.empty()) {
        // Shift reference mass (downward only, so tokens stay <= 0) until
        // the margin hits the target.
        auto& first = batch.items.front();
        const double delta = (*target_margin - dpo_margin(first, DpoConfig{beta})) / beta;
        auto& ref = delta > 0 ? first.ref_accepted.values : first.ref_rejected.values;
        for (auto& v : ref) v -= std::abs(delta) / static_cast<double>(ref.size());
    }
    return batch;
}

std::vector<CheckResult> run_loss_checks(const Kernels& k, std::uint64_t seed) {
    std::vector<CheckResult> out;
    const double ln2 = std::numbers::ln2;

    out.push_back(close_to("ntp: three tokens of ln 0.5 give 3 ln 2", ntp_loss(repeat(std::log(0.5), 3)), 3 * ln2,
                           kExactTolerance));
    out.push_back(close_to("ntp: all-zero log-probs give 0", ntp_loss(repeat(0.0, 5)), 0.0, 0.0));

    {
        PreferenceBatch b{{item(repeat(-1.3, 4), repeat(-0.7, 2), repeat(-1.3, 4), repeat(-0.7, 2))}};
        out.push_back(close_to("dpo: policy == reference gives ln 2", dpo_loss(b, DpoConfig{0.37}, k), ln2,
                               kExactTolerance));
    }
    {
        PreferenceBatch b{{item(TokenLogProbs{{-2.0 + std::log(3.0)}}, repeat(-1.0, 1), repeat(-2.0, 1),
                                repeat(-1.0, 1))}};
        out.push_back(close_to("dpo: beta=1, accepted log-ratio ln 3 gives ln(4/3)", dpo_loss(b, DpoConfig{1.0}, k),
                               std::log(4.0 / 3.0), kExactTolerance));
    }
    {
        PreferenceBatch b{{item(repeat(-1.0, 1), repeat(-5.0, 1), repeat(-3.0, 1), repeat(-3.0, 1))}};
        out.push_back(close_to("dpo: beta=0.5, log-ratios +2/-2 give ln(1+e^-2)", dpo_loss(b, DpoConfig{0.5}, k),
                               std::log1p(std::exp(-2.0)), kExactTolerance));
    }
    {
        PreferenceBatch b{{item(repeat(-1.0, 3), repeat(-2.0, 2), repeat(-1.0, 3), repeat(-2.0, 2))}};
        auto g = dpo_grad(b, DpoConfig{1.0}, k);
        bool ok = true;
        for (double v : g[0].policy_accepted) ok = ok && std::abs(v + 0.5) <= kExactTolerance;
        for (double v : g[0].policy_rejected) ok = ok && std::abs(v - 0.5) <= kExactTolerance;
        for (double v : g[0].ref_accepted) ok = ok && v == 0.0;
        for (double v : g[0].ref_rejected) ok = ok && v == 0.0;
        out.push_back({"grad: equal policies give -0.5 / +0.5 per token, reference gradient 0", ok, ""});
    }
    {
        // margin +-20: loss bracketed by e^-m bounds of softplus
        bool ok = true;
        std::string detail;
        for (double m : {20.0, -20.0}) {
            PreferenceBatch b{{item(TokenLogProbs{{-30.0 + m}}, repeat(-1.0, 1), repeat(-30.0, 1), repeat(-1.0, 1))}};
            double loss = dpo_loss(b, DpoConfig{1.0}, k);
            double lo = std::max(-m, 0.0) + std::exp(-std::abs(m)) - std::exp(-2 * std::abs(m)) / 2;
            double hi = std::max(-m, 0.0) + std::exp(-std::abs(m));
            ok = ok && loss > 0.0 && loss >= lo && loss <= hi;
            detail += fmt::format("m={:+g}: {:.6g} in [{:.6g}, {:.6g}]; ", m, loss, lo, hi);
        }
        out.push_back({"dpo: limits at margin +-20", ok, detail});
    }
    {
        bool ok = true;
        for (double m : {100.0, -100.0}) {
            PreferenceBatch b{{item(TokenLogProbs{{-150.0 + m}}, repeat(-1.0, 1), repeat(-150.0, 1), repeat(-1.0, 1))}};
            double loss = dpo_loss(b, DpoConfig{1.0}, k);
            auto g = dpo_grad(b, DpoConfig{1.0}, k);
            ok = ok && std::isfinite(loss) && loss > 0.0 && std::isfinite(g[0].policy_accepted[0]);
        }
        out.push_back({"dpo: finite at margin +-100", ok, ""});
    }
    {
        auto batch = random_batch(seed, 3, 0.5);
        double base = dpo_loss(batch, DpoConfig{0.5}, k);
        auto up = batch;
        up.items[0].policy_accepted.values[0] -= 0.25; // lowers the accepted log-ratio
        auto down = batch;
        down.items[0].policy_rejected.values[0] -= 0.25; // lowers the rejected log-ratio
        bool ok = dpo_loss(up, DpoConfig{0.5}, k) > base && dpo_loss(down, DpoConfig{0.5}, k) < base;
        out.push_back({"dpo: monotone in accepted and rejected log-ratios", ok, ""});
    }
    {
        std::mt19937_64 rng(seed + 1);
        std::uniform_real_distribution<double> beta_dist(0.05, 2.0);
        double worst = 0.0;
        for (std::size_t b = 0; b < 100; ++b) {
            const double beta = beta_dist(rng);
            std::optional<double> margin;
            if (b % 4 == 1) margin = 50.0;
            if (b % 4 == 2) margin = -50.0;
            auto batch = random_batch(seed + 100 + b, 1 + b % 5, beta, margin);
            worst = std::max(worst, worst_fd_error(batch, DpoConfig{beta}, k));
        }
        out.push_back({"grad: analytic vs central differences, 100 batches", worst < kGradTolerance,
                       fmt::format("worst relative error {:.3g} (tol {:g})", worst, kGradTolerance)});
    }
    return out;
}

} // namespace stepwise::losses
