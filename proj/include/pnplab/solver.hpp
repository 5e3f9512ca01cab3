#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "pnplab/denoiser.hpp"
#include "pnplab/errors.hpp"
#include "pnplab/linop.hpp"
#include "pnplab/signal.hpp"

namespace pnplab {

/// Averagedness constant of T_delta = D_delta o G: delta^2 / (2 delta^2 - 1).
inline double averagedness_theta(double delta) {
    const double d2 = delta * delta;
    if (!(d2 > 0.5) || !std::isfinite(d2)) throw InvalidParameter("averagedness_theta: need delta^2 > 1/2");
    return d2 / (2.0 * d2 - 1.0);
}

/// theta of the composition of a theta1- and a theta2-averaged operator.
inline double compose_averaged(double theta1, double theta2) {
    if (!(theta1 > 0.0 && theta1 < 1.0) || !(theta2 > 0.0 && theta2 < 1.0)) {
        throw InvalidParameter("compose_averaged: thetas must lie in (0, 1)");
    }
    return (theta1 + theta2 - 2.0 * theta1 * theta2) / (1.0 - theta1 * theta2);
}

struct PnpConfig {
    /// Step size; unset means 1 / ||A^T A||.
    std::optional<double> tau;
    std::size_t max_iters = 300;
    /// Stop once ||x_{i+1} - x_i|| <= tol (1 + ||x_{i+1}||).
    double tol = 1e-9;
    bool record_history = true;
    /// Iterates with a larger norm abort the run.
    double blowup_norm = 1e12;
};

struct FixedPointResult {
    Signal x_star;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> residual_history;
    std::vector<double> objective_history;
    double tau = 0.0;
    std::optional<std::string> warning;
};

/// Step size the solver will use for (op, cfg).
inline double resolve_tau(const ForwardOperator& op, const PnpConfig& cfg) {
    if (cfg.tau) {
        if (!(*cfg.tau > 0.0)) throw InvalidParameter("pnp: tau must be > 0");
        return *cfg.tau;
    }
    const double l = op_norm_sq(op);
    if (l <= 0.0) return 1.0;
    return 1.0 / l;
}

/// One application of T_delta(x) = D_delta(x - tau A^T (A x - y)).
template <SignalMap D>
Signal pnp_step(const ForwardOperator& op, const Signal& y, const D& denoiser, double tau, const Signal& x) {
    return denoiser(gradient_step(op, y, tau, x));
}

/// PnP proximal gradient descent x <- D_delta(G(x)) from x0.
template <SignalMap D>
FixedPointResult pnp_pgd(const ForwardOperator& op, const Signal& y, const D& denoiser, const PnpConfig& cfg,
                         const Signal& x0) {
    if (cfg.max_iters < 1) throw InvalidParameter("pnp: max_iters must be >= 1");
    if (!(cfg.tol > 0.0)) throw InvalidParameter("pnp: tol must be > 0");
    require_dim(x0, op.in_dim(), "pnp x0");
    require_dim(y, op.out_dim(), "pnp y");
    require_valid(y, "pnp y");

    FixedPointResult result;
    result.tau = resolve_tau(op, cfg);
    if (cfg.tau) {
        const double l = op_norm_sq(op);
        if (l > 0.0 && result.tau > (1.0 + 1e-9) / l) {
            result.warning = "tau exceeds 1/||A^T A||; averagedness certificate does not apply";
        }
    }

    Signal x = x0;
    for (std::size_t i = 1; i <= cfg.max_iters; ++i) {
        Signal next = pnp_step(op, y, denoiser, result.tau, x);
        const double norm = next.norm();
        if (!std::isfinite(norm) || norm > cfg.blowup_norm) {
            throw DivergenceError(i, "pnp_pgd diverged at iteration " + std::to_string(i));
        }
        const double residual = (next - x).norm();
        x = std::move(next);
        result.iterations = i;
        if (cfg.record_history) {
            result.residual_history.push_back(residual);
            result.objective_history.push_back(0.5 * (op.apply(x) - y).squaredNorm());
        }
        if (residual <= cfg.tol * (1.0 + norm)) {
            result.converged = true;
            break;
        }
    }
    result.x_star = std::move(x);
    return result;
}

/// T_delta written as x -> M x + c. Only exists for Tweedie scaling of an
/// affine (or shrinkage) base.
struct AffineIteration {
    Matrix m;
    Signal c;
};

inline AffineIteration affine_iteration_map(const ForwardOperator& op, const Signal& y, const ScaledDenoiser& sd,
                                            double tau) {
    if (sd.mode() != ScalingMode::Tweedie) {
        throw InvalidInput("linear oracle: only Tweedie scaling keeps T_delta affine in closed form");
    }
    auto parts = sd.base().affine_parts();
    if (!parts) throw InvalidInput("linear oracle: base denoiser must be affine");
    const auto& [w, b] = *parts;
    const Eigen::Index n = op.in_dim();
    if (w.rows() != n) throw InvalidInput("linear oracle: denoiser and operator dimensions differ");
    require_dim(y, op.out_dim(), "linear oracle y");

    const double u = 1.0 / (sd.delta() * sd.delta());
    const double g = sd.gamma_rescale() ? gamma_rescale_factor(sd.delta()) : 1.0;
    const Matrix a = op.to_dense();
    const Matrix k = (1.0 - u) * Matrix::Identity(n, n) + u * w;
    AffineIteration out;
    out.m = g * k * (Matrix::Identity(n, n) - tau * a.transpose() * a);
    out.c = g * (k * (tau * (a.transpose() * y)) + u * b);
    return out;
}

inline double spectral_radius(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    double rho = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
    return rho;
}

/// Unique fixed point of the affine T_delta by a direct dense solve of (I - M) x = c.
inline Signal linear_fixed_point_oracle(const ForwardOperator& op, const Signal& y, const ScaledDenoiser& sd,
                                        const PnpConfig& cfg) {
    const double tau = resolve_tau(op, cfg);
    const auto it = affine_iteration_map(op, y, sd, tau);
    if (spectral_radius(it.m) >= 1.0 - 1e-10) {
        throw NoUniqueFixedPoint("linear oracle: spectral radius of the iteration map is >= 1");
    }
    const Eigen::Index n = it.m.rows();
    return (Matrix::Identity(n, n) - it.m).partialPivLu().solve(it.c);
}

}  // namespace pnplab
