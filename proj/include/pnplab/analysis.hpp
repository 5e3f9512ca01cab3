#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pnplab/denoiser.hpp"
#include "pnplab/errors.hpp"
#include "pnplab/parallel.hpp"
#include "pnplab/prior.hpp"

namespace pnplab {

struct L2Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Paired Monte-Carlo moments of r = D(Y) - Y on one sample set:
///   residual_sq = mean ||r||^2, cross = mean <sigma xi, r>, noise_sq = mean ||sigma xi||^2.
/// For D_delta with u = 1/delta^2 the sample L2 loss is exactly
///   noise_sq + 2 u cross + u^2 residual_sq.
struct L2Moments {
    double noise_sq = 0.0;
    double cross = 0.0;
    double residual_sq = 0.0;

    double l2_at(double u) const { return noise_sq + 2.0 * u * cross + u * u * residual_sq; }
};

struct DeltaOptEstimate {
    double numerator = 0.0;    // E ||D(Y) - Y||^2
    double denominator = 0.0;  // E <sigma xi, D(Y) - Y>
    double delta_opt_sq = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    /// Set when the denominator is >= 0 and delta_opt_sq is therefore not a valid scale.
    bool nonnegative_denominator = false;
    L2Moments moments;
};

struct EstimatorOptions {
    std::size_t workers = 1;
};

namespace detail {

inline void require_samples(std::size_t samples) {
    if (samples < 2) throw InvalidParameter("estimator: samples must be >= 2");
}

/// Per-sample squared errors ||D(x + sigma xi) - x||^2.
template <SignalMap D>
std::vector<double> squared_errors(const D& d, const GmmPrior& prior, double sigma, std::size_t samples,
                                   std::uint64_t seed, std::size_t workers) {
    std::vector<double> out(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
        const auto pair = sample_pair_at(prior, sigma, seed, i);
        out[i] = (d(pair.noisy) - pair.clean).squaredNorm();
    });
    return out;
}

inline L2Estimate summarize_l2(std::span<const double> errors, std::uint64_t seed) {
    const auto ms = mean_stderr(errors);
    return {ms.mean, ms.std_error, errors.size(), seed};
}

}  // namespace detail

/// Monte-Carlo L2 loss E ||D(X + sigma xi) - X||^2 on sample_pairs(prior, sigma, samples, seed).
template <SignalMap D>
L2Estimate estimate_l2(const D& d, const GmmPrior& prior, double sigma, std::size_t samples, std::uint64_t seed,
                       EstimatorOptions opts = {}) {
    detail::require_samples(samples);
    const auto errors = detail::squared_errors(d, prior, sigma, samples, seed, opts.workers);
    return detail::summarize_l2(errors, seed);
}

/// delta_opt^2 = -E||D(Y) - Y||^2 / E<sigma xi, D(Y) - Y>, both moments on the
/// same samples. Standard error by the first-order delta method for a ratio of
/// correlated means.
template <SignalMap D>
DeltaOptEstimate estimate_delta_opt(const D& d, const GmmPrior& prior, double sigma, std::size_t samples,
                                    std::uint64_t seed, EstimatorOptions opts = {}) {
    detail::require_samples(samples);
    std::vector<double> a(samples), b(samples), c(samples);
    parallel_for(samples, opts.workers, [&](std::size_t i) {
        const auto pair = sample_pair_at(prior, sigma, seed, i);
        const Signal r = d(pair.noisy) - pair.noisy;
        const Signal noise = pair.noisy - pair.clean;
        a[i] = r.squaredNorm();
        b[i] = noise.dot(r);
        c[i] = noise.squaredNorm();
    });
    const auto ma = mean_stderr(a);
    const auto mb = mean_stderr(b);
    const auto mc = mean_stderr(c);

    DeltaOptEstimate est;
    est.samples = samples;
    est.seed = seed;
    est.numerator = ma.mean;
    est.denominator = mb.mean;
    est.moments = {mc.mean, mb.mean, ma.mean};
    if (std::abs(est.denominator) < 1e-12 * (1.0 + est.numerator)) {
        throw DegenerateDenoiser("degenerate denoiser: E<sigma xi, D(Y) - Y> vanishes (D is numerically the identity)");
    }
    est.delta_opt_sq = -est.numerator / est.denominator;
    est.nonnegative_denominator = est.denominator >= 0.0;

    const double n = static_cast<double>(samples);
    const double cov_ab = sample_covariance(a, b, ma.mean, mb.mean);
    const double bb = est.denominator;
    const double aa = est.numerator;
    const double var = ma.variance / (bb * bb) + aa * aa * mb.variance / (bb * bb * bb * bb) -
                       2.0 * aa * cov_ab / (bb * bb * bb);
    est.std_error = std::sqrt(std::max(0.0, var) / n);
    return est;
}

struct SandwichReport {
    DeltaOptEstimate delta_opt;
    L2Estimate l2_mmse;
    L2Estimate l2_scaled;  // Tweedie scaling of D at delta_opt
    L2Estimate l2_base;
    /// sqrt(se_a^2 + se_b^2) for the lower (MMSE vs scaled) and upper (scaled vs base) comparisons.
    double combined_se_lower = 0.0;
    double combined_se_upper = 0.0;
    double margin_lower = 0.0;  // l2_scaled - l2_mmse
    double margin_upper = 0.0;  // l2_base - l2_scaled
    bool pass = false;
};

/// L2(D_MMSE) <= L2(D_delta_opt) <= L2(D) on one shared sample set. `pass`
/// fails only if an inequality is violated by more than 3 combined standard errors.
template <SignalMap D>
SandwichReport verify_sandwich(const D& d, const GmmPrior& prior, double sigma, std::size_t samples,
                               std::uint64_t seed, EstimatorOptions opts = {}) {
    SandwichReport rep;
    rep.delta_opt = estimate_delta_opt(d, prior, sigma, samples, seed, opts);
    if (!(rep.delta_opt.delta_opt_sq > 0.0)) {
        throw DegenerateDenoiser("degenerate denoiser: estimated delta_opt^2 is not positive");
    }
    const auto mmse = Denoiser::exact_mmse(prior, sigma);
    const double delta = std::sqrt(rep.delta_opt.delta_opt_sq);
    const auto scaled = [&](const Signal& y) -> Signal {
        const double u = 1.0 / (delta * delta);
        return (1.0 - u) * y + u * d(y);
    };
    rep.l2_mmse = estimate_l2(mmse, prior, sigma, samples, seed, opts);
    rep.l2_scaled = estimate_l2(scaled, prior, sigma, samples, seed, opts);
    rep.l2_base = estimate_l2(d, prior, sigma, samples, seed, opts);
    rep.combined_se_lower = std::hypot(rep.l2_mmse.std_error, rep.l2_scaled.std_error);
    rep.combined_se_upper = std::hypot(rep.l2_scaled.std_error, rep.l2_base.std_error);
    rep.margin_lower = rep.l2_scaled.value - rep.l2_mmse.value;
    rep.margin_upper = rep.l2_base.value - rep.l2_scaled.value;
    rep.pass = rep.margin_lower >= -3.0 * rep.combined_se_lower && rep.margin_upper >= -3.0 * rep.combined_se_upper;
    return rep;
}

struct SweepPoint {
    double delta;
    L2Estimate l2;
};

/// L2 of the Tweedie-scaled D over a delta grid, every point on the same samples.
template <SignalMap D>
std::vector<SweepPoint> delta_sweep(const D& d, const GmmPrior& prior, double sigma, std::span<const double> grid,
                                    std::size_t samples, std::uint64_t seed, EstimatorOptions opts = {}) {
    if (grid.empty()) throw InvalidParameter("delta_sweep: empty grid");
    detail::require_samples(samples);
    for (double delta : grid) {
        if (!(delta > 0.0)) throw InvalidParameter("delta_sweep: grid values must be > 0");
    }
    // D(y) is evaluated once per sample; every grid point reuses it.
    std::vector<Signal> clean(samples), noisy(samples), denoised(samples);
    parallel_for(samples, opts.workers, [&](std::size_t i) {
        auto pair = sample_pair_at(prior, sigma, seed, i);
        denoised[i] = d(pair.noisy);
        clean[i] = std::move(pair.clean);
        noisy[i] = std::move(pair.noisy);
    });
    std::vector<SweepPoint> out;
    out.reserve(grid.size());
    std::vector<double> errors(samples);
    for (double delta : grid) {
        const double u = 1.0 / (delta * delta);
        for (std::size_t i = 0; i < samples; ++i) {
            errors[i] = ((1.0 - u) * noisy[i] + u * denoised[i] - clean[i]).squaredNorm();
        }
        out.push_back({delta, detail::summarize_l2(errors, seed)});
    }
    return out;
}

}  // namespace pnplab
