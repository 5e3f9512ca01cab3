#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pnplab/errors.hpp"
#include "pnplab/random.hpp"
#include "pnplab/signal.hpp"

namespace pnplab {

struct IdentityOp {
    Eigen::Index dim;
};

/// Inpainting mask: observed[i] == true keeps pixel i, otherwise it is zeroed.
struct MaskOp {
    std::vector<bool> observed;
};

/// Circular convolution (Ax)_i = sum_j kernel_j x_{(i - j) mod n}.
struct Conv1dOp {
    Eigen::Index dim;
    Signal kernel;
};

struct DenseOp {
    Matrix matrix;
};

/// Linear forward operator A : R^in_dim -> R^out_dim. Immutable once built.
class ForwardOperator {
public:
    using Kind = std::variant<IdentityOp, MaskOp, Conv1dOp, DenseOp>;

    static ForwardOperator identity(Eigen::Index dim) {
        if (dim < 1) throw InvalidParameter("identity: dim must be >= 1");
        return ForwardOperator(IdentityOp{dim});
    }

    static ForwardOperator mask(std::vector<bool> observed) {
        if (observed.empty()) throw InvalidParameter("mask: empty mask");
        return ForwardOperator(MaskOp{std::move(observed)});
    }

    /// Seeded uniform-random mask with round(masked_fraction * dim) hidden
    /// pixels. At least one pixel is always observed.
    static ForwardOperator random_mask(Eigen::Index dim, double masked_fraction, std::uint64_t seed) {
        if (dim < 1) throw InvalidParameter("mask: dim must be >= 1");
        if (!(masked_fraction >= 0.0 && masked_fraction < 1.0)) {
            throw InvalidParameter("mask: mask_fraction must lie in [0, 1)");
        }
        auto hidden = static_cast<Eigen::Index>(std::llround(masked_fraction * static_cast<double>(dim)));
        hidden = std::min(hidden, dim - 1);
        std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        SplitMix64 rng(seed);
        // Fisher-Yates with an explicit draw so the permutation is portable.
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(order[i], order[j]);
        }
        std::vector<bool> observed(static_cast<std::size_t>(dim), true);
        for (Eigen::Index k = 0; k < hidden; ++k) observed[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = false;
        return mask(std::move(observed));
    }

    static ForwardOperator conv1d(Eigen::Index dim, Signal kernel) {
        if (dim < 1) throw InvalidParameter("conv1d: dim must be >= 1");
        if (kernel.size() < 1 || kernel.size() > dim) {
            throw InvalidParameter("conv1d: kernel length must lie in [1, dim]");
        }
        require_valid(kernel, "conv1d kernel");
        return ForwardOperator(Conv1dOp{dim, std::move(kernel)});
    }

    static ForwardOperator dense(Matrix matrix) {
        if (matrix.rows() < 1 || matrix.cols() < 1) throw InvalidParameter("dense: empty matrix");
        if (!matrix.allFinite()) throw InvalidParameter("dense: non-finite entry");
        return ForwardOperator(DenseOp{std::move(matrix)});
    }

    const Kind& kind() const { return kind_; }

    Eigen::Index in_dim() const {
        return std::visit(
            [](const auto& op) -> Eigen::Index {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, MaskOp>) return static_cast<Eigen::Index>(op.observed.size());
                else if constexpr (std::is_same_v<T, DenseOp>) return op.matrix.cols();
                else return op.dim;
            },
            kind_);
    }

    Eigen::Index out_dim() const {
        if (const auto* d = std::get_if<DenseOp>(&kind_)) return d->matrix.rows();
        return in_dim();
    }

    std::string name() const {
        static constexpr const char* names[] = {"identity", "mask", "conv1d", "dense"};
        return names[kind_.index()];
    }

    Signal apply(const Signal& x) const {
        require_dim(x, in_dim(), "apply");
        return std::visit(
            [&](const auto& op) -> Signal {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, IdentityOp>) {
                    return x;
                } else if constexpr (std::is_same_v<T, MaskOp>) {
                    return masked(op, x);
                } else if constexpr (std::is_same_v<T, Conv1dOp>) {
                    const Eigen::Index n = op.dim;
                    Signal out = Signal::Zero(n);
                    for (Eigen::Index i = 0; i < n; ++i) {
                        for (Eigen::Index j = 0; j < op.kernel.size(); ++j) {
                            out[i] += op.kernel[j] * x[(i - j + n) % n];
                        }
                    }
                    return out;
                } else {
                    return op.matrix * x;
                }
            },
            kind_);
    }

    Signal adjoint(const Signal& y) const {
        require_dim(y, out_dim(), "adjoint");
        return std::visit(
            [&](const auto& op) -> Signal {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, IdentityOp>) {
                    return y;
                } else if constexpr (std::is_same_v<T, MaskOp>) {
                    return masked(op, y);
                } else if constexpr (std::is_same_v<T, Conv1dOp>) {
                    const Eigen::Index n = op.dim;
                    Signal out = Signal::Zero(n);
                    for (Eigen::Index j = 0; j < n; ++j) {
                        for (Eigen::Index m = 0; m < op.kernel.size(); ++m) {
                            out[j] += op.kernel[m] * y[(j + m) % n];
                        }
                    }
                    return out;
                } else {
                    return op.matrix.transpose() * y;
                }
            },
            kind_);
    }

    /// Dense representation of A (test and oracle use; O(in_dim * out_dim)).
    Matrix to_dense() const {
        const Eigen::Index n = in_dim();
        Matrix out(out_dim(), n);
        for (Eigen::Index j = 0; j < n; ++j) out.col(j) = apply(Signal::Unit(n, j));
        return out;
    }

private:
    explicit ForwardOperator(Kind kind) : kind_(std::move(kind)) {}

    static Signal masked(const MaskOp& op, const Signal& v) {
        Signal out = v;
        for (std::size_t i = 0; i < op.observed.size(); ++i) {
            if (!op.observed[i]) out[static_cast<Eigen::Index>(i)] = 0.0;
        }
        return out;
    }

    Kind kind_;
};

inline Signal apply(const ForwardOperator& op, const Signal& x) { return op.apply(x); }
inline Signal adjoint(const ForwardOperator& op, const Signal& y) { return op.adjoint(y); }

struct PowerIterationOptions {
    int max_iters = 200;
    double rel_tol = 1e-12;
};

/// Rayleigh quotients <v_k, A^T A v_k> / <v_k, v_k> of the power iteration on
/// A^T A from a seeded Gaussian start. Stops early once successive quotients
/// agree to rel_tol, or when the iterate collapses to zero (returns {0}).
inline std::vector<double> power_iteration_history(const ForwardOperator& op,
                                                   PowerIterationOptions opts, std::uint64_t seed) {
    if (opts.max_iters < 1) throw InvalidParameter("op_norm_sq: iters must be >= 1");
    auto rng = stream_for(seed, 0);
    Signal v = standard_normal(op.in_dim(), rng);
    v.normalize();
    std::vector<double> history;
    for (int it = 0; it < opts.max_iters; ++it) {
        Signal w = op.adjoint(op.apply(v));
        const double rq = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0 || !std::isfinite(norm)) {
            history.push_back(0.0);
            return history;
        }
        history.push_back(rq);
        if (history.size() >= 2) {
            const double prev = history[history.size() - 2];
            if (std::abs(rq - prev) <= opts.rel_tol * std::abs(rq)) break;
        }
        v = w / norm;
    }
    return history;
}

/// Estimate of ||A^T A|| (largest eigenvalue of A^T A).
inline double op_norm_sq(const ForwardOperator& op, int iters = 200, std::uint64_t seed = 0) {
    PowerIterationOptions opts;
    opts.max_iters = iters;
    const auto history = power_iteration_history(op, opts, seed);
    return std::max(0.0, history.back());
}

/// G(x) = x - tau A^T (A x - y).
inline Signal gradient_step(const ForwardOperator& op, const Signal& y, double tau, const Signal& x) {
    if (!(tau > 0.0)) throw InvalidParameter("gradient_step: tau must be > 0");
    require_dim(y, op.out_dim(), "gradient_step y");
    require_dim(x, op.in_dim(), "gradient_step x");
    return x - tau * op.adjoint(op.apply(x) - y);
}

}  // namespace pnplab
