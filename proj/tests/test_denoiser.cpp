#include <gtest/gtest.h>

#include <cmath>

#include "pnplab/denoiser.hpp"

using namespace pnplab;

namespace {

std::vector<Signal> point_cloud(Eigen::Index n, std::size_t count, std::uint64_t seed, double scale = 1.0) {
    std::vector<Signal> pts;
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = stream_for(seed, i);
        pts.push_back(scale * standard_normal(n, rng));
    }
    return pts;
}

GmmPrior two_mode_prior() {
    return GmmPrior({0.6, 0.4}, {make_signal({1.0, 0.0}), make_signal({-1.0, 0.5})}, {0.8, 0.5});
}

Denoiser random_affine(Eigen::Index n, double target_norm, std::uint64_t seed, bool with_bias) {
    auto rng = stream_for(seed, 0);
    Matrix w(n, n);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(1, rng)[0];
    w *= target_norm / Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
    Signal b = with_bias ? standard_normal(n, rng) : Signal(Signal::Zero(n));
    return Denoiser::affine(w, b);
}

}  // namespace

TEST(Denoiser, DenoiseExamples) {
    EXPECT_EQ(denoise(Denoiser::shrinkage(1.0, 2), make_signal({3, -1})), make_signal({3, -1}));
    EXPECT_EQ(denoise(Denoiser::shrinkage(0.5, 2), make_signal({4, 2})), make_signal({2, 1}));
    const auto prior = GmmPrior::gaussian(Signal::Zero(2), 1.0);
    const Signal y = make_signal({2, 0});
    const Signal out = denoise(Denoiser::exact_mmse(prior, 1.0), y);
    EXPECT_LE((out - make_signal({1, 0})).norm(), 1e-15);
    EXPECT_LE((out - posterior_mean_oracle(prior, 1.0, y)).norm(), 1e-15);
}

TEST(Denoiser, MismatchedUsesTrainingSigma) {
    const auto prior = two_mode_prior();
    const auto d = Denoiser::mismatched_mmse(prior, 0.3, 0.1);
    const Signal y = make_signal({0.2, 0.7});
    EXPECT_LE((d(y) - prior.mmse_denoise(0.3, y)).norm(), 0.0);
}

TEST(Denoiser, RejectsBadInput) {
    EXPECT_THROW(Denoiser::shrinkage(0.0, 2), InvalidParameter);
    EXPECT_THROW(Denoiser::shrinkage(1.5, 2), InvalidParameter);
    EXPECT_THROW(denoise(Denoiser::shrinkage(0.5, 2), make_signal({1})), InvalidInput);
    EXPECT_THROW(tweedie_scale(Denoiser::identity(1), 0.0), InvalidParameter);
    EXPECT_THROW(homogeneous_scale(Denoiser::identity(1), -1.0), InvalidParameter);
}

TEST(Denoiser, TweedieScaleExamples) {
    const auto prior = two_mode_prior();
    const auto d = Denoiser::exact_mmse(prior, 0.2);
    const Signal y = make_signal({0.3, -0.4});
    EXPECT_EQ(tweedie_scale(d, 1.0)(y), d(y));
    EXPECT_NEAR(tweedie_scale(Denoiser::shrinkage(0.5, 1), std::sqrt(2.0))(make_signal({4}))[0], 3.0, 1e-14);
    for (double delta : {0.3, 1.0, 7.0}) {
        EXPECT_LE((tweedie_scale(Denoiser::identity(2), delta)(y) - y).norm(), 1e-15);
    }
}

TEST(Denoiser, HomogeneousScaleExamples) {
    const auto d = Denoiser::exact_mmse(two_mode_prior(), 0.2);
    const Signal y = make_signal({0.3, -0.4});
    EXPECT_EQ(homogeneous_scale(d, 1.0)(y), d(y));
    EXPECT_NEAR(homogeneous_scale(Denoiser::shrinkage(0.5, 1), 7.0)(make_signal({4}))[0], 2.0, 1e-14);
    const auto shift = Denoiser::affine(Matrix::Zero(1, 1), make_signal({6}));
    EXPECT_NEAR(homogeneous_scale(shift, 2.0)(make_signal({123}))[0], 3.0, 1e-14);
}

TEST(Denoiser, GammaRescaleExamples) {
    const Signal y = make_signal({4});
    const ScaledDenoiser plain(Denoiser::shrinkage(0.5, 1), 3.0, ScalingMode::Tweedie, false);
    EXPECT_EQ(plain(y), tweedie_scale(Denoiser::shrinkage(0.5, 1), 3.0)(y));
    const ScaledDenoiser halved(Denoiser::identity(1), 1.0, ScalingMode::Tweedie, true);
    EXPECT_NEAR(halved(y)[0], 2.0, 1e-15);
    EXPECT_NEAR(gamma_rescale_factor(1.0), 0.5, 0.0);
}

TEST(Denoiser, GammaRescaledFamilyApproachesIdentity) {
    const auto d = Denoiser::exact_mmse(two_mode_prior(), 0.2);
    const double delta = 1e3;  // delta^2 = 1e6
    const ScaledDenoiser sd(d, delta, ScalingMode::Tweedie, true);
    for (const auto& y : point_cloud(2, 20, 8, 2.0)) {
        const double dev = (sd(y) - y).norm();
        const double bound = (d(y) - y).norm() / (delta * delta) + y.norm() / (1.0 + delta * delta);
        EXPECT_LE(dev, bound * (1.0 + 1e-9) + 1e-15);
        EXPECT_LE(dev, 2e-6 * (1.0 + y.norm() + (d(y) - y).norm()));
    }
}

TEST(Denoiser, TweedieInterpolationIdentityAndA2Exactness) {
    const auto d = Denoiser::mismatched_mmse(two_mode_prior(), 0.4, 0.2);
    for (double delta : {0.5, 1.0, 1.3, 10.0, 1e3}) {
        const auto sd = tweedie_scale(d, delta);
        const double u = 1.0 / (delta * delta);
        for (const auto& y : point_cloud(2, 20, 4, 1.5)) {
            const Signal out = sd(y);
            EXPECT_LE((out - ((1.0 - u) * y + u * d(y))).norm(), 1e-15 * (1.0 + y.norm()));
            const double lhs = (out - y).norm() * delta * delta;
            const double rhs = (d(y) - y).norm();
            EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + y.norm()) * delta * delta);
        }
    }
}

TEST(Denoiser, HomogeneousScalingIsNoOpOnLinearBases) {
    const auto lin = random_affine(4, 0.8, 3, false);
    const auto pts = point_cloud(4, 10, 12);
    for (const auto& y : pts) {
        const Signal ref = lin(y);
        double worst = 0.0;
        for (double delta : {0.1, 0.5, 2.0, 10.0, 100.0, 1e3}) {
            worst = std::max(worst, (homogeneous_scale(lin, delta)(y) - ref).norm());
        }
        EXPECT_LE(worst, 1e-12);
    }
}

TEST(Denoiser, LipschitzExamples) {
    const auto pts = point_cloud(3, 15, 2);
    EXPECT_NEAR(estimate_lipschitz(Denoiser::shrinkage(0.9, 3), pts), 0.9, 1e-12);
    EXPECT_NEAR(estimate_lipschitz(Denoiser::identity(3), pts), 1.0, 1e-12);
    const double s2 = 1.0, sigma = 0.3;
    const auto mmse = Denoiser::exact_mmse(GmmPrior::gaussian(Signal::Zero(3), s2), sigma);
    EXPECT_LE(estimate_lipschitz(mmse, pts), s2 / (s2 + sigma * sigma) + 1e-9);
}

TEST(Denoiser, LipschitzRejectsDegenerateClouds) {
    std::vector<Signal> same{make_signal({1, 2}), make_signal({1, 2})};
    EXPECT_THROW(estimate_lipschitz(Denoiser::identity(2), same), InvalidInput);
    std::vector<Signal> with_dup{make_signal({1, 2}), make_signal({1, 2}), make_signal({0, 2})};
    EXPECT_NEAR(estimate_lipschitz(Denoiser::shrinkage(0.4, 2), with_dup), 0.4, 1e-15);
}

TEST(Denoiser, AffinePairwiseBoundedBySpectralNorm) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto d = random_affine(6, 1.3, s, true);
        const double pairwise = estimate_lipschitz(d, point_cloud(6, 30, s + 100));
        EXPECT_LE(pairwise, 1.3 + 1e-8);
        EXPECT_NEAR(spectral_norm(d.affine_parts()->first), 1.3, 1e-8);
    }
}

TEST(Denoiser, TweedieScalingPreservesNonExpansiveness) {
    const auto d = Denoiser::exact_mmse(GmmPrior({0.5, 0.5}, {make_signal({0.3, 0}), make_signal({-0.3, 0})},
                                                 {1.0, 1.0}),
                                        0.3);
    const auto pts = point_cloud(2, 40, 6, 2.0);
    ASSERT_LE(estimate_lipschitz<Denoiser>(d, pts), 1.0);
    for (double delta : {1.0, 1.1, 2.0, 10.0, 100.0}) {
        EXPECT_LE(estimate_lipschitz(tweedie_scale(d, delta), pts), 1.0 + 1e-9);
    }
}

TEST(Denoiser, OutputScaleMakesContraction) {
    const auto d = Denoiser::identity(3).scaled_output(1.0 - 1e-3);
    EXPECT_NEAR(estimate_lipschitz(d, point_cloud(3, 10, 1)), 1.0 - 1e-3, 1e-12);
}
