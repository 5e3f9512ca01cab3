#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SVD>

#include "pnplab/denoiser.hpp"
#include "pnplab/linop.hpp"
#include "pnplab/prior.hpp"
#include "pnplab/random.hpp"

// Seeded synthetic instances shared by the experiments, the self-test and the suites.

namespace pnplab {

struct RandomPriorSpec {
    Eigen::Index dim = 4;
    std::size_t components = 3;
    double mean_scale = 1.0;
    double variance_min = 0.05;
    double variance_max = 0.2;
    std::uint64_t seed = 0;
};

/// Means ~ N(0, mean_scale^2 I), variances uniform in [variance_min, variance_max],
/// weights uniform in [1, 2] then normalized.
inline GmmPrior random_gmm_prior(const RandomPriorSpec& spec) {
    if (spec.components < 1 || spec.dim < 1) throw InvalidParameter("random prior: empty shape");
    SplitMix64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> weights;
    std::vector<Signal> means;
    std::vector<double> variances;
    double total = 0.0;
    for (std::size_t k = 0; k < spec.components; ++k) {
        weights.push_back(1.0 + unif(rng));
        total += weights.back();
        means.push_back(spec.mean_scale * standard_normal(spec.dim, rng));
        variances.push_back(spec.variance_min + (spec.variance_max - spec.variance_min) * unif(rng));
    }
    for (double& w : weights) w /= total;
    // Renormalize the last weight so the sum is 1 to the last bit.
    double head = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) head += weights[k];
    weights.back() = 1.0 - head;
    return GmmPrior(std::move(weights), std::move(means), std::move(variances));
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    }
    return m;
}

/// Affine denoiser W y + b with ||W||_2 == spectral_norm exactly (up to SVD round-off).
inline Denoiser random_affine_denoiser(Eigen::Index n, double spectral_norm, std::uint64_t seed, bool with_bias) {
    Matrix w = random_matrix(n, n, seed);
    w *= spectral_norm / Eigen::JacobiSVD<Matrix>(w).singularValues()(0);
    Signal b = Signal::Zero(n);
    if (with_bias) {
        SplitMix64 rng(seed ^ 0xB1A5ULL);
        b = standard_normal(n, rng);
    }
    return Denoiser::affine(std::move(w), std::move(b));
}

}  // namespace pnplab
