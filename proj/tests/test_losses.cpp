#include "stepwise/errors.hpp"
#include "stepwise/loss_checks.hpp"
#include "stepwise/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace stepwise::losses;
using stepwise::EmptyBatch;
using stepwise::NonFiniteInput;

namespace {

// Independent long-double evaluation of the preference loss.
long double oracle_margin(const PreferenceItem& it, long double beta) {
    auto sum = [](const TokenLogProbs& s) {
        long double acc = 0;
        for (double v : s.values) acc += v;
        return acc;
    };
    return beta * ((sum(it.policy_accepted) - sum(it.ref_accepted)) - (sum(it.policy_rejected) - sum(it.ref_rejected)));
}

long double oracle_item_loss(const PreferenceItem& it, long double beta) {
    return std::log1p(std::exp(-oracle_margin(it, beta)));
}

long double oracle_loss(const PreferenceBatch& b, long double beta) {
    long double acc = 0;
    for (const auto& it : b.items) acc += oracle_item_loss(it, beta);
    return acc / static_cast<long double>(b.items.size());
}

// Two tokens per sequence; the policy's first token sits `ratio` above the
// reference's, all values staying <= 0.
void set_ratio(TokenLogProbs& policy, TokenLogProbs& ref, double ratio, double second) {
    policy.values = {-1.0 + std::min(ratio, 0.0), second};
    ref.values = {-1.0 - std::max(ratio, 0.0), second};
}

PreferenceItem item_with_ratios(double accepted_ratio, double rejected_ratio) {
    PreferenceItem it;
    set_ratio(it.policy_accepted, it.ref_accepted, accepted_ratio, -2.0);
    set_ratio(it.policy_rejected, it.ref_rejected, rejected_ratio, -0.5);
    return it;
}

double rel_err(double a, double b) {
    double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
    return std::abs(a - b) / scale;
}

} // namespace

TEST_CASE("ntp_loss: documented examples") {
    CHECK(ntp_loss({{0.0, 0.0, 0.0}}) == 0.0);
    const long double ln_half = std::log(0.5L);
    CHECK(std::abs(ntp_loss({{std::log(0.5), std::log(0.5), std::log(0.5)}}) - static_cast<double>(-3 * ln_half)) < 1e-12);
    CHECK(ntp_loss({{-1.0}}) == 1.0);
}

TEST_CASE("ntp_loss: additive over concatenation and never negative") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> lp(-10.0, 0.0);
    for (int i = 0; i < 200; ++i) {
        TokenLogProbs a, b, ab;
        for (int k = 0; k < 1 + i % 7; ++k) a.values.push_back(lp(rng));
        for (int k = 0; k < 1 + i % 5; ++k) b.values.push_back(lp(rng));
        ab.values = a.values;
        ab.values.insert(ab.values.end(), b.values.begin(), b.values.end());
        CHECK(ntp_loss(ab) == doctest::Approx(ntp_loss(a) + ntp_loss(b)).epsilon(1e-12));
        CHECK(ntp_loss(a) >= 0.0);
    }
}

TEST_CASE("ntp_loss: input validation") {
    CHECK_THROWS_AS((void)ntp_loss({{}}), NonFiniteInput);
    CHECK_THROWS_AS((void)ntp_loss({{-1.0, std::nan("")}}), NonFiniteInput);
    CHECK_THROWS_AS((void)ntp_loss({{-1.0, -std::numeric_limits<double>::infinity()}}), NonFiniteInput);
    CHECK_THROWS_AS((void)ntp_loss({{0.5}}), NonFiniteInput);
}

TEST_CASE("dpo_loss: documented examples") {
    PreferenceBatch same{{item_with_ratios(0.0, 0.0)}};
    for (double beta : {0.01, 0.1, 1.0, 7.5}) {
        CHECK(std::abs(dpo_loss(same, {beta}) - std::log(2.0L)) < 1e-12);
    }

    PreferenceBatch ln3{{item_with_ratios(std::log(3.0), 0.0)}};
    CHECK(std::abs(dpo_loss(ln3, {1.0}) - std::log(4.0L / 3.0L)) < 1e-12);

    PreferenceBatch two{{item_with_ratios(2.0, -2.0)}};
    CHECK(dpo_margin(two.items[0], {0.5}) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(dpo_loss(two, {0.5}) - std::log1p(std::exp(-2.0L))) < 1e-12);
}

TEST_CASE("dpo_loss: agrees with a long-double evaluation on random batches") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        double beta = 0.05 + 0.1 * static_cast<double>(seed % 10);
        auto batch = random_batch(seed, 1 + seed % 6, beta);
        CHECK(dpo_loss(batch, {beta}) == doctest::Approx(static_cast<double>(oracle_loss(batch, beta))).epsilon(1e-12));
    }
}

TEST_CASE("dpo_loss: monotone in the margin, bounded at the extremes") {
    double prev = std::numeric_limits<double>::infinity();
    for (double m = -30.0; m <= 30.0; m += 0.25) {
        PreferenceBatch b{{item_with_ratios(m, 0.0)}};
        double l = dpo_loss(b, {1.0});
        CHECK(l > 0.0);
        CHECK(l < prev);
        prev = l;
    }
    // -log sigmoid(m) lies in (e^-m - e^-2m/2, e^-m) for m > 0 and in (-m, -m + e^m) for m < 0
    PreferenceBatch hi{{item_with_ratios(20.0, 0.0)}};
    PreferenceBatch lo{{item_with_ratios(-20.0, 0.0)}};
    double up = dpo_loss(hi, {1.0});
    double down = dpo_loss(lo, {1.0});
    CHECK(up < std::exp(-20.0));
    CHECK(up > std::exp(-20.0) - std::exp(-40.0));
    CHECK(down > 20.0);
    CHECK(down < 20.0 + std::exp(-20.0) * 1.0001);

    PreferenceBatch huge{{item_with_ratios(800.0, 0.0)}, };
    PreferenceBatch tiny{{item_with_ratios(-800.0, 0.0)}};
    CHECK(std::isfinite(dpo_loss(huge, {1.0})));
    CHECK(dpo_loss(tiny, {1.0}) == doctest::Approx(800.0));
}

TEST_CASE("dpo_loss: scaling beta scales the margin") {
    auto batch = random_batch(42, 1, 1.0);
    double m1 = dpo_margin(batch.items[0], {1.0});
    for (double beta : {0.1, 0.5, 2.0}) {
        CHECK(dpo_margin(batch.items[0], {beta}) == doctest::Approx(beta * m1).epsilon(1e-12));
    }
}

TEST_CASE("dpo_loss: input validation") {
    CHECK_THROWS_AS((void)dpo_loss({}, {0.1}), EmptyBatch);
    PreferenceBatch b{{item_with_ratios(0.0, 0.0)}};
    CHECK_THROWS_AS((void)dpo_loss(b, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)dpo_loss(b, {-1.0}), std::invalid_argument);
    b.items[0].ref_accepted.values.push_back(-1.0);
    CHECK_THROWS_AS((void)dpo_loss(b, {0.1}), std::invalid_argument);
    PreferenceBatch bad{{item_with_ratios(0.0, 0.0)}};
    bad.items[0].policy_rejected.values[0] = std::nan("");
    CHECK_THROWS_AS((void)dpo_loss(bad, {0.1}), NonFiniteInput);
    CHECK_THROWS_AS((void)dpo_grad({}, {0.1}), EmptyBatch);
}

TEST_CASE("dpo_grad: documented example") {
    PreferenceBatch b{{item_with_ratios(0.0, 0.0)}};
    auto g = dpo_grad(b, {1.0});
    REQUIRE(g.size() == 1);
    for (double v : g[0].policy_accepted) CHECK(v == doctest::Approx(-0.5).epsilon(1e-15));
    for (double v : g[0].policy_rejected) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    for (double v : g[0].ref_accepted) CHECK(v == 0.0);
    for (double v : g[0].ref_rejected) CHECK(v == 0.0);
}

TEST_CASE("dpo_grad: matches central differences of the long-double loss") {
    // Margins include the saturated regime, where one item's loss is far
    // below the rounding error of the batch mean. Only item i's own term
    // depends on its tokens, so it is differenced alone and divided by N.
    const double margins[] = {-50.0, -12.0, -1.0, 0.3, 4.0, 50.0};
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const double beta = 0.1 + 0.2 * static_cast<double>(seed % 4);
        auto batch = random_batch(1000 + seed, 1 + seed % 3, beta, margins[seed % std::size(margins)]);
        auto grad = dpo_grad(batch, {beta});
        for (std::size_t i = 0; i < batch.items.size(); ++i) {
            auto probe = [&](std::vector<double>& values, const std::vector<double>& analytic) {
                for (std::size_t t = 0; t < values.size(); ++t) {
                    const double h = 1e-6;
                    const double x = values[t];
                    values[t] = x + h;
                    long double up = oracle_item_loss(batch.items[i], beta);
                    values[t] = x - h;
                    long double down = oracle_item_loss(batch.items[i], beta);
                    values[t] = x;
                    const auto n = static_cast<long double>(batch.items.size());
                    double fd = static_cast<double>((up - down) / (2.0L * h) / n);
                    INFO("seed " << seed << " item " << i << " analytic " << analytic[t] << " fd " << fd);
                    CHECK(rel_err(analytic[t], fd) < 1e-5);
                    ++checked;
                }
            };
            probe(batch.items[i].policy_accepted.values, grad[i].policy_accepted);
            probe(batch.items[i].policy_rejected.values, grad[i].policy_rejected);
        }
    }
    CHECK(checked > 100);
}

TEST_CASE("self-check harness") {
    auto results = run_loss_checks();
    CHECK(results.size() >= 8);
    for (const auto& r : results) {
        INFO(r.name << ": " << r.detail);
        CHECK(r.passed);
    }

    Kernels broken;
    broken.sigmoid = [](double x) { return 0.97 * sigmoid(x); };
    auto faulty = run_loss_checks(broken);
    CHECK(std::any_of(faulty.begin(), faulty.end(), [](const CheckResult& r) { return !r.passed; }));
}
