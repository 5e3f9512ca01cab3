#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "pnplab/errors.hpp"
#include "pnplab/parallel.hpp"
#include "pnplab/random.hpp"
#include "pnplab/signal.hpp"

namespace pnplab {

/// AWGN level sigma > 0.
struct NoiseModel {
    double sigma;

    explicit NoiseModel(double s) : sigma(s) {
        if (!(s > 0.0) || !std::isfinite(s)) throw InvalidParameter("noise: sigma must be > 0");
    }
};

/// Isotropic Gaussian mixture p_X = sum_k w_k N(mu_k, v_k I_n).
///
/// Every quantity of the Gaussian-smoothed density p_sigma = p_X * G_sigma is
/// closed form: convolving with N(0, sigma^2 I) only adds sigma^2 to each
/// component variance.
class GmmPrior {
public:
    GmmPrior(std::vector<double> weights, std::vector<Signal> means, std::vector<double> variances)
        : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
        const std::size_t k = weights_.size();
        if (k == 0) throw InvalidParameter("prior: at least one component required");
        if (means_.size() != k || variances_.size() != k) {
            throw InvalidParameter("prior: weights, means and variances must have equal length");
        }
        double total = 0.0;
        for (double w : weights_) {
            if (!(w > 0.0) || !std::isfinite(w)) throw InvalidParameter("prior: weights must be > 0");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) throw InvalidParameter("prior: weights must sum to 1");
        for (double v : variances_) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("prior: variances must be > 0");
        }
        dim_ = means_.front().size();
        for (const auto& m : means_) {
            require_valid(m, "prior mean");
            if (m.size() != dim_) throw InvalidParameter("prior: means must share one dimension");
        }
        log_weights_.reserve(k);
        for (double w : weights_) log_weights_.push_back(std::log(w));
    }

    /// Single Gaussian N(mean, variance I).
    static GmmPrior gaussian(Signal mean, double variance) {
        return GmmPrior({1.0}, {std::move(mean)}, {variance});
    }

    Eigen::Index dim() const { return dim_; }
    std::size_t components() const { return weights_.size(); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Signal>& means() const { return means_; }
    const std::vector<double>& variances() const { return variances_; }

    Signal mixture_mean() const {
        Signal m = Signal::Zero(dim_);
        for (std::size_t k = 0; k < components(); ++k) m += weights_[k] * means_[k];
        return m;
    }

    /// log(w_k N(y; mu_k, (v_k + sigma^2) I)) for every component.
    std::vector<double> component_log_densities(double sigma, const Signal& y) const {
        check_args(sigma, y);
        const double n = static_cast<double>(dim_);
        std::vector<double> out(components());
        for (std::size_t k = 0; k < components(); ++k) {
            const double s = variances_[k] + sigma * sigma;
            out[k] = log_weights_[k] - 0.5 * n * std::log(2.0 * std::numbers::pi * s) -
                     0.5 * (y - means_[k]).squaredNorm() / s;
        }
        return out;
    }

    /// Posterior component probabilities r_k(y) under p_sigma. Falls back to a
    /// hard assignment to the nearest component when every log-density is
    /// non-finite.
    std::vector<double> responsibilities(double sigma, const Signal& y) const {
        auto logs = component_log_densities(sigma, y);
        double peak = -std::numeric_limits<double>::infinity();
        for (double l : logs) peak = std::max(peak, l);
        std::vector<double> r(logs.size(), 0.0);
        if (!std::isfinite(peak)) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < components(); ++k) {
                const double d = (y - means_[k]).squaredNorm() / (variances_[k] + sigma * sigma);
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            r[best] = 1.0;
            return r;
        }
        double total = 0.0;
        for (std::size_t k = 0; k < logs.size(); ++k) {
            r[k] = std::exp(logs[k] - peak);
            total += r[k];
        }
        for (double& v : r) v /= total;
        return r;
    }

    /// log p_sigma(y); sigma = 0 gives log p_X(y).
    double log_p_sigma(double sigma, const Signal& y) const {
        const auto logs = component_log_densities(sigma, y);
        double peak = -std::numeric_limits<double>::infinity();
        for (double l : logs) peak = std::max(peak, l);
        if (!std::isfinite(peak)) return peak;
        double total = 0.0;
        for (double l : logs) total += std::exp(l - peak);
        return peak + std::log(total);
    }

    /// grad_y log p_sigma(y) = sum_k r_k(y) (mu_k - y) / (v_k + sigma^2).
    Signal score(double sigma, const Signal& y) const {
        const auto r = responsibilities(sigma, y);
        Signal g = Signal::Zero(dim_);
        for (std::size_t k = 0; k < components(); ++k) {
            if (r[k] == 0.0) continue;
            g += (r[k] / (variances_[k] + sigma * sigma)) * (means_[k] - y);
        }
        return g;
    }

    /// Exact MMSE denoiser through Tweedie's identity: y + sigma^2 grad log p_sigma(y).
    Signal mmse_denoise(double sigma, const Signal& y) const {
        if (!(sigma > 0.0)) throw InvalidParameter("mmse_denoise: sigma must be > 0");
        return y + sigma * sigma * score(sigma, y);
    }

    /// E[X | Y = y] assembled from per-component Wiener posteriors. Shares no
    /// code with score() beyond the responsibilities.
    Signal posterior_mean_oracle(double sigma, const Signal& y) const {
        if (!(sigma > 0.0)) throw InvalidParameter("posterior_mean_oracle: sigma must be > 0");
        const auto r = responsibilities(sigma, y);
        Signal out = Signal::Zero(dim_);
        for (std::size_t k = 0; k < components(); ++k) {
            const double gain = variances_[k] / (variances_[k] + sigma * sigma);
            out += r[k] * (means_[k] + gain * (y - means_[k]));
        }
        return out;
    }

    /// Draw x ~ p_X with the given generator.
    template <class Rng>
    Signal sample(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        std::size_t k = 0;
        double acc = weights_[0];
        while (u >= acc && k + 1 < components()) acc += weights_[++k];
        return means_[k] + std::sqrt(variances_[k]) * standard_normal(dim_, rng);
    }

private:
    void check_args(double sigma, const Signal& y) const {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidParameter("prior: sigma must be >= 0");
        require_dim(y, dim_, "prior");
    }

    std::vector<double> weights_;
    std::vector<Signal> means_;
    std::vector<double> variances_;
    std::vector<double> log_weights_;
    Eigen::Index dim_ = 0;
};

inline double log_p_sigma(const GmmPrior& p, double sigma, const Signal& y) { return p.log_p_sigma(sigma, y); }
inline Signal score(const GmmPrior& p, double sigma, const Signal& y) { return p.score(sigma, y); }
inline Signal mmse_denoise(const GmmPrior& p, double sigma, const Signal& y) { return p.mmse_denoise(sigma, y); }
inline Signal posterior_mean_oracle(const GmmPrior& p, double sigma, const Signal& y) {
    return p.posterior_mean_oracle(sigma, y);
}

/// Clean sample x ~ p_X and its noisy observation y = x + sigma xi.
struct SamplePair {
    Signal clean;
    Signal noisy;
};

/// Pair `index` of the stream (prior, sigma, seed). Independent of any other index.
inline SamplePair sample_pair_at(const GmmPrior& prior, double sigma, std::uint64_t seed, std::uint64_t index) {
    auto rng = stream_for(seed, index);
    SamplePair p;
    p.clean = prior.sample(rng);
    p.noisy = p.clean + sigma * standard_normal(prior.dim(), rng);
    return p;
}

inline std::vector<SamplePair> sample_pairs(const GmmPrior& prior, double sigma, std::size_t count,
                                            std::uint64_t seed, std::size_t workers = 1) {
    if (!(sigma > 0.0)) throw InvalidParameter("sample_pairs: sigma must be > 0");
    if (count < 1) throw InvalidParameter("sample_pairs: count must be >= 1");
    std::vector<SamplePair> out(count);
    parallel_for(count, workers, [&](std::size_t i) { out[i] = sample_pair_at(prior, sigma, seed, i); });
    return out;
}

}  // namespace pnplab
