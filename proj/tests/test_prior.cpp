#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pnplab/prior.hpp"

using namespace pnplab;

namespace {

GmmPrior standard_normal_1d() { return GmmPrior::gaussian(make_signal({0.0}), 1.0); }

GmmPrior symmetric_pair() {
    return GmmPrior({0.5, 0.5}, {make_signal({-2.0}), make_signal({2.0})}, {0.25, 0.25});
}

/// Three unequal components in R^n with means on a seeded random draw.
GmmPrior curved_prior(Eigen::Index n, std::uint64_t seed) {
    auto rng = stream_for(seed, 0);
    std::vector<Signal> means;
    for (int k = 0; k < 3; ++k) means.push_back(1.5 * standard_normal(n, rng));
    return GmmPrior({0.5, 0.3, 0.2}, means, {0.6, 1.0, 0.4});
}

double gauss_pdf_1d(double y, double mean, double var) {
    return std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

TEST(Prior, RejectsInvalidParameters) {
    EXPECT_THROW(GmmPrior({0.5, 0.4}, {make_signal({0}), make_signal({1})}, {1, 1}), InvalidParameter);
    EXPECT_THROW(GmmPrior({1.0}, {make_signal({0})}, {0.0}), InvalidParameter);
    EXPECT_THROW(GmmPrior({0.5, 0.5}, {make_signal({0}), make_signal({1, 2})}, {1, 1}), InvalidParameter);
    EXPECT_THROW(NoiseModel(0.0), InvalidParameter);
    EXPECT_THROW(log_p_sigma(standard_normal_1d(), 0.1, make_signal({0, 0})), InvalidInput);
}

TEST(Prior, LogDensityExamples) {
    EXPECT_NEAR(log_p_sigma(standard_normal_1d(), 0.0, make_signal({0})), -0.5 * std::log(2 * std::numbers::pi),
                1e-14);
    EXPECT_NEAR(log_p_sigma(standard_normal_1d(), 0.0, make_signal({0})), -0.91894, 1e-5);
    EXPECT_NEAR(log_p_sigma(standard_normal_1d(), 1.0, make_signal({0})), -1.26551, 1e-5);
    const double direct = std::log(0.5 * gauss_pdf_1d(0, -2, 0.25) + 0.5 * gauss_pdf_1d(0, 2, 0.25));
    EXPECT_NEAR(log_p_sigma(symmetric_pair(), 0.0, make_signal({0})), direct, 1e-12);
}

TEST(Prior, LogDensityStableFarFromEveryComponent) {
    const double v = log_p_sigma(symmetric_pair(), 0.0, make_signal({1e4}));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, std::log(0.5) - 0.5 * std::log(2 * std::numbers::pi * 0.25) - 0.5 * (1e4 - 2) * (1e4 - 2) / 0.25,
                1e-6 * std::abs(v));
}

TEST(Prior, ScoreExamples) {
    EXPECT_NEAR(score(standard_normal_1d(), 0.0, make_signal({3}))[0], -3.0, 1e-15);
    EXPECT_NEAR(score(symmetric_pair(), 0.0, make_signal({0}))[0], 0.0, 1e-15);
    const auto p = GmmPrior::gaussian(make_signal({1, -2, 3}), 0.7);
    for (double s : {0.0, 0.1, 2.0}) EXPECT_LE(score(p, s, p.means()[0]).norm(), 1e-15);
}

TEST(Prior, ScoreMatchesFiniteDifferencesOfLogDensity) {
    const auto p = curved_prior(4, 3);
    const double h = 1e-5;
    for (std::uint64_t i = 0; i < 50; ++i) {
        auto rng = stream_for(91, i);
        const Signal y = p.sample(rng);
        for (double sigma : {0.0, 0.1, 0.5}) {
            const Signal g = score(p, sigma, y);
            Signal fd(4);
            for (Eigen::Index j = 0; j < 4; ++j) {
                Signal e = Signal::Unit(4, j) * h;
                fd[j] = (log_p_sigma(p, sigma, y + e) - log_p_sigma(p, sigma, y - e)) / (2 * h);
            }
            EXPECT_LE((g - fd).norm(), 1e-6 * (1.0 + g.norm()));
        }
    }
}

TEST(Prior, MmseExamples) {
    const double s2 = 2.0, sigma = 0.5;
    const auto p = GmmPrior::gaussian(Signal::Zero(3), s2);
    const Signal y = make_signal({1.0, -4.0, 0.25});
    EXPECT_LE((mmse_denoise(p, sigma, y) - (s2 / (s2 + sigma * sigma)) * y).norm(), 1e-14);
    EXPECT_NEAR(mmse_denoise(symmetric_pair(), 0.3, make_signal({0}))[0], 0.0, 1e-15);
    EXPECT_THROW(mmse_denoise(p, 0.0, y), InvalidParameter);
}

TEST(Prior, MmseApproachesIdentityAsNoiseVanishes) {
    const auto p = curved_prior(4, 5);
    const double sigma = 1e-4;
    auto rng = stream_for(5, 0);
    for (int i = 0; i < 20; ++i) {
        const Signal y = p.sample(rng);
        // ||D(y) - y|| = sigma^2 ||score||; the score is O(1) in the bulk.
        EXPECT_LE((mmse_denoise(p, sigma, y) - y).norm(), 100.0 * sigma * sigma);
    }
}

TEST(Prior, PosteriorMeanOracleExamples) {
    EXPECT_NEAR(posterior_mean_oracle(standard_normal_1d(), 1.0, make_signal({2}))[0], 1.0, 1e-15);
    const auto p = GmmPrior::gaussian(make_signal({0.3, -1.0}), 0.5);
    EXPECT_LE((posterior_mean_oracle(p, 0.2, p.means()[0]) - p.means()[0]).norm(), 1e-15);
}

TEST(Prior, TweedieIdentityMatchesPosteriorMean) {
    for (Eigen::Index n : {1, 4, 16}) {
        const auto p = curved_prior(n, 17 + n);
        for (double sigma : {0.05, 0.1, 0.5}) {
            double worst = 0.0;
            for (std::uint64_t i = 0; i < 1000; ++i) {
                auto rng = stream_for(300 + n, i);
                const Signal y = p.sample(rng) + sigma * standard_normal(n, rng);
                const Signal a = mmse_denoise(p, sigma, y);
                const Signal b = posterior_mean_oracle(p, sigma, y);
                worst = std::max(worst, (a - b).norm() / (1.0 + y.norm()));
            }
            EXPECT_LE(worst, 1e-10) << "n=" << n << " sigma=" << sigma;
        }
    }
}

TEST(Prior, ScoreDeviationIsSecondOrderInSigma) {
    const auto p = curved_prior(2, 41);
    auto rng = stream_for(42, 0);
    for (int t = 0; t < 3; ++t) {
        const Signal y = p.means()[static_cast<std::size_t>(t)] + 0.3 * standard_normal(2, rng);
        const Signal base = score(p, 0.0, y);
        for (double sigma : {0.2, 0.1, 0.05}) {
            const double e_full = (score(p, sigma, y) - base).norm();
            const double e_half = (score(p, sigma / 2, y) - base).norm();
            const double ratio = e_half / e_full;
            EXPECT_GE(ratio, 0.18) << "sigma=" << sigma;
            EXPECT_LE(ratio, 0.35) << "sigma=" << sigma;
        }
    }
}

TEST(Prior, SamplePairsDeterministic) {
    const auto p = curved_prior(4, 2);
    const auto a = sample_pairs(p, 0.1, 200, 99);
    const auto b = sample_pairs(p, 0.1, 200, 99, 4);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].clean, b[i].clean);
        EXPECT_EQ(a[i].noisy, b[i].noisy);
    }
    const auto c = sample_pairs(p, 0.1, 200, 100);
    EXPECT_NE(a[0].clean, c[0].clean);
}

TEST(Prior, TinyNoiseLeavesSamplesClean) {
    const auto pairs = sample_pairs(curved_prior(3, 1), 1e-12, 1000, 5);
    std::size_t close = 0, total = 0;
    for (const auto& pr : pairs) {
        for (Eigen::Index j = 0; j < 3; ++j, ++total) close += std::abs(pr.noisy[j] - pr.clean[j]) <= 1e-10;
    }
    EXPECT_GE(static_cast<double>(close) / static_cast<double>(total), 0.9999);
}

TEST(Prior, EmpiricalMeanMatchesMixtureMean) {
    const auto p = curved_prior(2, 8);
    const std::size_t count = 100000;
    const auto pairs = sample_pairs(p, 0.1, count, 123);
    const Signal mu = p.mixture_mean();
    for (Eigen::Index j = 0; j < 2; ++j) {
        std::vector<double> xs(count);
        for (std::size_t i = 0; i < count; ++i) xs[i] = pairs[i].clean[j];
        const auto ms = mean_stderr(xs);
        EXPECT_LE(std::abs(ms.mean - mu[j]), 4.0 * ms.std_error);
    }
}
