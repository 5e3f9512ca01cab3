#pragma once

#include <cmath>
#include <concepts>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pnplab/errors.hpp"
#include "pnplab/linop.hpp"
#include "pnplab/prior.hpp"
#include "pnplab/signal.hpp"

namespace pnplab {

/// Anything that maps a Signal to a Signal of the same dimension.
template <class F>
concept SignalMap = requires(const F& f, const Signal& y) {
    { f(y) } -> std::convertible_to<Signal>;
};

struct ExactMmse {
    GmmPrior prior;
    double sigma_train;
};

/// MMSE formula evaluated at sigma_train while the data carries noise sigma_eval.
struct MismatchedMmse {
    GmmPrior prior;
    double sigma_train;
    double sigma_eval;
};

struct Shrinkage {
    double alpha;
    Eigen::Index dim;
};

struct Affine {
    Matrix weight;
    Signal bias;
};

/// Base Gaussian denoiser D. `output_scale` (default 1) post-multiplies the
/// output; (1 - eps) turns a non-expansive D into a contraction.
class Denoiser {
public:
    using Kind = std::variant<ExactMmse, MismatchedMmse, Shrinkage, Affine>;

    static Denoiser exact_mmse(GmmPrior prior, double sigma) {
        if (!(sigma > 0.0)) throw InvalidParameter("exact_mmse: sigma must be > 0");
        return Denoiser(ExactMmse{std::move(prior), sigma});
    }

    static Denoiser mismatched_mmse(GmmPrior prior, double sigma_train, double sigma_eval) {
        if (!(sigma_train > 0.0) || !(sigma_eval > 0.0)) {
            throw InvalidParameter("mismatched_mmse: sigmas must be > 0");
        }
        return Denoiser(MismatchedMmse{std::move(prior), sigma_train, sigma_eval});
    }

    static Denoiser shrinkage(double alpha, Eigen::Index dim) {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("shrinkage: alpha must lie in (0, 1]");
        if (dim < 1) throw InvalidParameter("shrinkage: dim must be >= 1");
        return Denoiser(Shrinkage{alpha, dim});
    }

    static Denoiser identity(Eigen::Index dim) { return shrinkage(1.0, dim); }

    static Denoiser affine(Matrix weight, Signal bias) {
        if (weight.rows() != weight.cols() || weight.rows() != bias.size() || bias.size() < 1) {
            throw InvalidParameter("affine: W must be n x n and b of length n");
        }
        if (!weight.allFinite() || !bias.allFinite()) throw InvalidParameter("affine: non-finite entry");
        return Denoiser(Affine{std::move(weight), std::move(bias)});
    }

    /// Copy of this denoiser whose output is multiplied by `factor`.
    Denoiser scaled_output(double factor) const {
        if (!(factor > 0.0)) throw InvalidParameter("output scale must be > 0");
        Denoiser d = *this;
        d.output_scale_ *= factor;
        return d;
    }

    const Kind& kind() const { return kind_; }
    double output_scale() const { return output_scale_; }

    Eigen::Index dim() const {
        return std::visit(
            [](const auto& k) -> Eigen::Index {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Shrinkage>) return k.dim;
                else if constexpr (std::is_same_v<T, Affine>) return k.bias.size();
                else return k.prior.dim();
            },
            kind_);
    }

    std::string name() const {
        static constexpr const char* names[] = {"exact_mmse", "mismatched_mmse", "shrinkage", "affine"};
        return names[kind_.index()];
    }

    bool is_affine() const { return std::holds_alternative<Shrinkage>(kind_) || std::holds_alternative<Affine>(kind_); }

    /// (W, b) of an affine or shrinkage base, including output_scale.
    std::optional<std::pair<Matrix, Signal>> affine_parts() const {
        if (const auto* s = std::get_if<Shrinkage>(&kind_)) {
            return std::pair{Matrix(output_scale_ * s->alpha * Matrix::Identity(s->dim, s->dim)),
                             Signal(Signal::Zero(s->dim))};
        }
        if (const auto* a = std::get_if<Affine>(&kind_)) {
            return std::pair{Matrix(output_scale_ * a->weight), Signal(output_scale_ * a->bias)};
        }
        return std::nullopt;
    }

    Signal operator()(const Signal& y) const {
        require_dim(y, dim(), "denoise");
        Signal out = std::visit(
            [&](const auto& k) -> Signal {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, ExactMmse> || std::is_same_v<T, MismatchedMmse>) {
                    return k.prior.mmse_denoise(k.sigma_train, y);
                } else if constexpr (std::is_same_v<T, Shrinkage>) {
                    return k.alpha * y;
                } else {
                    return k.weight * y + k.bias;
                }
            },
            kind_);
        if (output_scale_ != 1.0) out *= output_scale_;
        return out;
    }

private:
    explicit Denoiser(Kind kind) : kind_(std::move(kind)) {}

    Kind kind_;
    double output_scale_ = 1.0;
};

inline Signal denoise(const Denoiser& d, const Signal& y) { return d(y); }

enum class ScalingMode { Tweedie, Homogeneous };

inline const char* to_string(ScalingMode m) { return m == ScalingMode::Tweedie ? "tweedie" : "homogeneous"; }

/// gamma(1/delta^2) = delta^2 / (1 + delta^2).
inline double gamma_rescale_factor(double delta) {
    const double d2 = delta * delta;
    return d2 / (1.0 + d2);
}

/// D_delta built from a base denoiser:
///   Tweedie:      y + (D(y) - y) / delta^2
///   Homogeneous:  D(delta y) / delta
/// optionally multiplied by gamma(1/delta^2).
class ScaledDenoiser {
public:
    ScaledDenoiser(Denoiser base, double delta, ScalingMode mode, bool gamma_rescale = false)
        : base_(std::move(base)), delta_(delta), mode_(mode), gamma_rescale_(gamma_rescale) {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidParameter("scaling: delta must be > 0");
    }

    const Denoiser& base() const { return base_; }
    double delta() const { return delta_; }
    ScalingMode mode() const { return mode_; }
    bool gamma_rescale() const { return gamma_rescale_; }
    Eigen::Index dim() const { return base_.dim(); }

    ScaledDenoiser with_delta(double delta) const { return {base_, delta, mode_, gamma_rescale_}; }

    Signal operator()(const Signal& y) const {
        require_dim(y, dim(), "evaluate_scaled");
        Signal out;
        if (mode_ == ScalingMode::Tweedie) {
            const double u = 1.0 / (delta_ * delta_);
            // (1 - u) y + u D(y): the 1/delta^2-averaged form, exact at delta = 1.
            out = u == 1.0 ? base_(y) : Signal((1.0 - u) * y + u * base_(y));
        } else {
            out = delta_ == 1.0 ? base_(y) : Signal(base_(Signal(delta_ * y)) / delta_);
        }
        if (gamma_rescale_) out *= gamma_rescale_factor(delta_);
        return out;
    }

private:
    Denoiser base_;
    double delta_;
    ScalingMode mode_;
    bool gamma_rescale_;
};

inline ScaledDenoiser tweedie_scale(const Denoiser& d, double delta) {
    return {d, delta, ScalingMode::Tweedie, false};
}

inline ScaledDenoiser homogeneous_scale(const Denoiser& d, double delta) {
    return {d, delta, ScalingMode::Homogeneous, false};
}

inline Signal evaluate_scaled(const ScaledDenoiser& sd, const Signal& y) { return sd(y); }

/// max over distinct pairs of ||D(y1) - D(y2)|| / ||y1 - y2||. Identical points are skipped.
template <SignalMap D>
double estimate_lipschitz(const D& d, std::span<const Signal> points) {
    std::vector<Signal> images;
    images.reserve(points.size());
    for (const auto& p : points) images.push_back(d(p));
    double best = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double dy = (points[i] - points[j]).norm();
            if (dy == 0.0) continue;
            ++pairs;
            best = std::max(best, (images[i] - images[j]).norm() / dy);
        }
    }
    if (pairs == 0) throw InvalidInput("estimate_lipschitz: need at least one pair of distinct points");
    return best;
}

/// Spectral norm ||W||_2 via power iteration on W^T W.
inline double spectral_norm(const Matrix& w, int iters = 5000, std::uint64_t seed = 0) {
    PowerIterationOptions opts;
    opts.max_iters = iters;
    opts.rel_tol = 1e-15;
    const auto history = power_iteration_history(ForwardOperator::dense(w), opts, seed);
    return std::sqrt(std::max(0.0, history.back()));
}

/// Pairwise estimate for a base denoiser. Affine bases are additionally checked
/// against the spectral norm of W; a pairwise ratio above it is a logic error.
inline double estimate_lipschitz(const Denoiser& d, std::span<const Signal> points) {
    const double pairwise = estimate_lipschitz<Denoiser>(d, points);
    if (auto parts = d.affine_parts()) {
        const double exact = spectral_norm(parts->first);
        if (pairwise > exact + 1e-8) {
            throw std::logic_error("estimate_lipschitz: pairwise ratio exceeds the spectral norm of W");
        }
    }
    return pairwise;
}

}  // namespace pnplab
