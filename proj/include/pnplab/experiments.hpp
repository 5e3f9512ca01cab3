#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnplab/analysis.hpp"
#include "pnplab/denoiser.hpp"
#include "pnplab/linop.hpp"
#include "pnplab/parallel.hpp"
#include "pnplab/prior.hpp"
#include "pnplab/solver.hpp"

namespace pnplab {

enum class ExperimentKind { DeltaSweep, Stability, ConvReg, Lipschitz };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::DeltaSweep: return "delta-sweep";
        case ExperimentKind::Stability: return "stability";
        case ExperimentKind::ConvReg: return "conv-reg";
        case ExperimentKind::Lipschitz: return "lipschitz";
    }
    return "?";
}

inline std::optional<ExperimentKind> parse_experiment_kind(const std::string& name) {
    for (auto k : {ExperimentKind::DeltaSweep, ExperimentKind::Stability, ExperimentKind::ConvReg,
                   ExperimentKind::Lipschitz}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

struct OperatorSpec {
    std::string kind = "mask";  // identity | mask | conv1d | dense
    double mask_fraction = 0.2;
    std::vector<double> kernel;
    std::vector<std::vector<double>> matrix;
    std::uint64_t seed = 0;

    ForwardOperator build(Eigen::Index dim) const {
        if (kind == "identity") return ForwardOperator::identity(dim);
        if (kind == "mask") return ForwardOperator::random_mask(dim, mask_fraction, seed);
        if (kind == "conv1d") {
            Signal k(static_cast<Eigen::Index>(kernel.size()));
            for (std::size_t i = 0; i < kernel.size(); ++i) k[static_cast<Eigen::Index>(i)] = kernel[i];
            return ForwardOperator::conv1d(dim, k);
        }
        if (kind == "dense") {
            if (matrix.empty()) throw InvalidParameter("operator: dense kind needs a matrix");
            Matrix m(static_cast<Eigen::Index>(matrix.size()), static_cast<Eigen::Index>(matrix.front().size()));
            for (std::size_t i = 0; i < matrix.size(); ++i) {
                if (matrix[i].size() != matrix.front().size()) throw InvalidParameter("operator: ragged matrix");
                for (std::size_t j = 0; j < matrix[i].size(); ++j) {
                    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = matrix[i][j];
                }
            }
            if (m.cols() != dim) throw InvalidParameter("operator: matrix columns must equal the prior dimension");
            return ForwardOperator::dense(std::move(m));
        }
        throw InvalidParameter("operator: unknown kind '" + kind + "'");
    }
};

struct DenoiserSpec {
    std::string kind = "exact_mmse";  // exact_mmse | mismatched_mmse | shrinkage | affine
    double alpha = 0.5;
    std::optional<double> sigma_train;  // unset: the experiment sigma
    double weight_scale = 0.9;          // affine W = weight_scale * I unless `weight` is given
    std::vector<std::vector<double>> weight;
    double bias_value = 0.5;            // affine b = bias_value * 1 unless `bias` is given
    std::vector<double> bias;
    double contract_eps = 0.0;          // output multiplied by (1 - contract_eps)

    Denoiser build(const GmmPrior& prior, double sigma) const {
        const Eigen::Index n = prior.dim();
        Denoiser d = [&] {
            if (kind == "exact_mmse") return Denoiser::exact_mmse(prior, sigma_train.value_or(sigma));
            if (kind == "mismatched_mmse") return Denoiser::mismatched_mmse(prior, sigma_train.value_or(sigma), sigma);
            if (kind == "shrinkage") return Denoiser::shrinkage(alpha, n);
            if (kind == "affine") {
                Matrix w = weight_scale * Matrix::Identity(n, n);
                if (!weight.empty()) {
                    if (static_cast<Eigen::Index>(weight.size()) != n) throw InvalidParameter("affine: W must be n x n");
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const auto& row = weight[static_cast<std::size_t>(i)];
                        if (static_cast<Eigen::Index>(row.size()) != n) throw InvalidParameter("affine: W must be n x n");
                        for (Eigen::Index j = 0; j < n; ++j) w(i, j) = row[static_cast<std::size_t>(j)];
                    }
                }
                Signal b = Signal::Constant(n, bias_value);
                if (!bias.empty()) {
                    if (static_cast<Eigen::Index>(bias.size()) != n) throw InvalidParameter("affine: b must have length n");
                    for (Eigen::Index i = 0; i < n; ++i) b[i] = bias[static_cast<std::size_t>(i)];
                }
                return Denoiser::affine(std::move(w), std::move(b));
            }
            throw InvalidParameter("denoiser: unknown kind '" + kind + "'");
        }();
        if (contract_eps != 0.0) {
            if (!(contract_eps > 0.0 && contract_eps < 1.0)) throw InvalidParameter("denoiser: contract_eps must lie in (0, 1)");
            d = d.scaled_output(1.0 - contract_eps);
        }
        return d;
    }
};

struct ScalingSpec {
    ScalingMode mode = ScalingMode::Tweedie;
    double delta = 1.0;
    bool gamma_rescale = false;
};

inline std::vector<double> log_spaced(double lo, double hi, std::size_t points) {
    if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw InvalidParameter("grid: need 0 < lo <= hi and points >= 1");
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i) {
        const double t = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        g.push_back(lo * std::pow(hi / lo, t));
    }
    g.back() = hi;
    return g;
}

inline std::vector<double> default_k_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 256; k *= 2) g.push_back(k);
    return g;
}

/// Fully resolved experiment parameters.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::ConvReg;
    GmmPrior prior = GmmPrior::gaussian(Signal::Zero(1), 1.0);
    OperatorSpec op;
    DenoiserSpec denoiser;
    ScalingSpec scaling;
    double sigma = 0.1;
    std::vector<double> delta_grid = log_spaced(1.0, 1e3, 32);
    std::vector<double> k_grid = default_k_grid();
    std::vector<double> sigma_grid{0.01, 0.03, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
    std::vector<double> mismatch_grid{1.0, 1.5, 2.0, 3.0};
    PnpConfig solver;
    std::size_t samples = 100000;
    std::size_t lipschitz_points = 200;
    bool resample_xi = false;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct ExperimentRecord {
    std::string experiment;
    double key = 0.0;
    std::map<std::string, double> metrics;
    double runtime_ms = 0.0;
};

namespace detail {

class Stopwatch {
public:
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void sort_records(std::vector<ExperimentRecord>& records) {
    std::stable_sort(records.begin(), records.end(),
                     [](const ExperimentRecord& a, const ExperimentRecord& b) { return a.key < b.key; });
}

/// Ground truth x and one noise draw xi shared by the solver experiments.
struct SolverInstance {
    ForwardOperator op;
    Signal clean;
    Signal measurement;  // A x, noiseless
    Signal xi;
};

inline SolverInstance make_solver_instance(const ExperimentSpec& spec) {
    auto op = spec.op.build(spec.prior.dim());
    auto rng = stream_for(spec.seed, 0);
    Signal clean = spec.prior.sample(rng);
    Signal measurement = op.apply(clean);
    auto noise_rng = stream_for(spec.seed, 1);
    Signal xi = standard_normal(op.out_dim(), noise_rng);
    return {std::move(op), std::move(clean), std::move(measurement), std::move(xi)};
}

inline void require_nonempty(const std::vector<double>& grid, const char* name) {
    if (grid.empty()) throw InvalidParameter(std::string(name) + " must be nonempty");
    for (double g : grid) {
        if (!(g > 0.0) || !std::isfinite(g)) throw InvalidParameter(std::string(name) + " values must be > 0");
    }
}

/// Metric-name suffix for a grid value: 1.5 -> "1.5".
inline std::string grid_label(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

/// Distance of PnP(delta, y_k), y_k = y + (sigma/k) xi, to PnP(delta, y) for every k in the grid.
inline std::vector<ExperimentRecord> run_stability(const ExperimentSpec& spec) {
    detail::require_nonempty(spec.k_grid, "k grid");
    const auto inst = detail::make_solver_instance(spec);
    const Denoiser base = spec.denoiser.build(spec.prior, spec.sigma);
    const ScaledDenoiser sd(base, spec.scaling.delta, spec.scaling.mode, spec.scaling.gamma_rescale);
    const Signal x0 = Signal::Zero(inst.op.in_dim());

    std::optional<Signal> reference;
    std::optional<std::size_t> reference_failure;
    try {
        auto ref = pnp_pgd(inst.op, inst.measurement, sd, spec.solver, x0);
        reference = std::move(ref.x_star);
    } catch (const DivergenceError& e) {
        reference_failure = e.iteration();
    }

    std::vector<ExperimentRecord> records(spec.k_grid.size());
    parallel_for(spec.k_grid.size(), spec.workers, [&](std::size_t i) {
        detail::Stopwatch clock;
        const double k = spec.k_grid[i];
        ExperimentRecord rec{to_string(ExperimentKind::Stability), k, {}, 0.0};
        const Signal yk = inst.measurement + (spec.sigma / k) * inst.xi;
        rec.metrics["perturbation_norm"] = (yk - inst.measurement).norm();
        try {
            const auto res = pnp_pgd(inst.op, yk, sd, spec.solver, x0);
            rec.metrics["converged"] = res.converged ? 1.0 : 0.0;
            rec.metrics["iterations"] = static_cast<double>(res.iterations);
            if (reference) {
                rec.metrics["distance_to_limit"] = (res.x_star - *reference).norm();
            } else {
                rec.metrics["diverged"] = 1.0;
                rec.metrics["diverged_at"] = static_cast<double>(*reference_failure);
            }
        } catch (const DivergenceError& e) {
            rec.metrics["diverged"] = 1.0;
            rec.metrics["diverged_at"] = static_cast<double>(e.iteration());
        }
        rec.runtime_ms = clock.elapsed_ms();
        records[i] = std::move(rec);
    });
    detail::sort_records(records);
    return records;
}

/// Tweedie (or homogeneous) family over a delta grid with data y_delta = A x + (sigma/delta) xi.
inline std::vector<ExperimentRecord> run_conv_reg(const ExperimentSpec& spec) {
    detail::require_nonempty(spec.delta_grid, "delta grid");
    const auto inst = detail::make_solver_instance(spec);
    const Denoiser base = spec.denoiser.build(spec.prior, spec.sigma);
    const Signal x0 = Signal::Zero(inst.op.in_dim());
    const double signal_norm = inst.measurement.norm();
    if (!(signal_norm > 0.0)) throw InvalidInput("conv-reg: A x is zero; data consistency undefined");

    std::vector<double> grid = spec.delta_grid;
    std::sort(grid.begin(), grid.end());
    std::vector<ExperimentRecord> records(grid.size());
    std::vector<std::optional<Signal>> solutions(grid.size());
    parallel_for(grid.size(), spec.workers, [&](std::size_t i) {
        detail::Stopwatch clock;
        const double delta = grid[i];
        ExperimentRecord rec{to_string(ExperimentKind::ConvReg), delta, {}, 0.0};
        Signal xi = inst.xi;
        if (spec.resample_xi) {
            auto rng = stream_for(spec.seed, 2 + i);
            xi = standard_normal(inst.op.out_dim(), rng);
        }
        const Signal y = inst.measurement + (spec.sigma / delta) * xi;
        const ScaledDenoiser sd(base, delta, spec.scaling.mode, spec.scaling.gamma_rescale);
        try {
            auto res = pnp_pgd(inst.op, y, sd, spec.solver, x0);
            rec.metrics["converged"] = res.converged ? 1.0 : 0.0;
            rec.metrics["iterations"] = static_cast<double>(res.iterations);
            rec.metrics["data_consistency"] = (inst.op.apply(res.x_star) - inst.measurement).norm() / signal_norm;
            rec.metrics["distance_to_truth"] = (res.x_star - inst.clean).norm();
            if (!res.residual_history.empty()) rec.metrics["final_residual"] = res.residual_history.back();
            solutions[i] = std::move(res.x_star);
        } catch (const DivergenceError& e) {
            rec.metrics["diverged"] = 1.0;
            rec.metrics["diverged_at"] = static_cast<double>(e.iteration());
        }
        rec.runtime_ms = clock.elapsed_ms();
        records[i] = std::move(rec);
    });
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (solutions[i] && solutions[i + 1]) {
            records[i].metrics["iterate_gap"] = (*solutions[i] - *solutions[i + 1]).norm();
        }
    }
    return records;
}

/// L2 curves of the Tweedie-scaled mismatch family and their estimated delta_opt.
/// Curve records are keyed by delta; delta_opt records by the mismatch ratio
/// sigma_train / sigma, with metric names suffixed by that ratio.
inline std::vector<ExperimentRecord> run_delta_sweep_experiment(const ExperimentSpec& spec) {
    detail::require_nonempty(spec.delta_grid, "delta grid");
    detail::require_nonempty(spec.mismatch_grid, "mismatch grid");
    std::vector<double> grid = spec.delta_grid;
    std::sort(grid.begin(), grid.end());

    std::map<double, ExperimentRecord> curve;
    for (double delta : grid) curve[delta] = {to_string(ExperimentKind::DeltaSweep), delta, {}, 0.0};
    std::vector<ExperimentRecord> summary;
    const EstimatorOptions opts{spec.workers};
    std::vector<double> delta_opts;
    std::vector<double> delta_opt_errors;
    for (double ratio : spec.mismatch_grid) {
        detail::Stopwatch clock;
        const auto d = ratio == 1.0 ? Denoiser::exact_mmse(spec.prior, spec.sigma)
                                    : Denoiser::mismatched_mmse(spec.prior, ratio * spec.sigma, spec.sigma);
        const std::string label = detail::grid_label(ratio);
        const auto est = estimate_delta_opt(d, spec.prior, spec.sigma, spec.samples, spec.seed, opts);
        const auto sweep = delta_sweep(d, spec.prior, spec.sigma, grid, spec.samples, spec.seed, opts);
        double best_delta = sweep.front().delta, best = sweep.front().l2.value;
        for (const auto& pt : sweep) {
            curve[pt.delta].metrics["l2_mismatch_" + label] = pt.l2.value;
            curve[pt.delta].metrics["l2_stderr_mismatch_" + label] = pt.l2.std_error;
            if (pt.l2.value < best) {
                best = pt.l2.value;
                best_delta = pt.delta;
            }
        }
        ExperimentRecord rec{to_string(ExperimentKind::DeltaSweep), ratio, {}, 0.0};
        rec.metrics["delta_opt_sq"] = est.delta_opt_sq;
        rec.metrics["delta_opt_sq_stderr"] = est.std_error;
        rec.metrics["argmin_delta"] = best_delta;
        rec.metrics["l2_at_delta_opt"] = est.moments.l2_at(1.0 / est.delta_opt_sq);
        delta_opts.push_back(est.delta_opt_sq);
        delta_opt_errors.push_back(est.std_error);
        rec.runtime_ms = clock.elapsed_ms();
        summary.push_back(std::move(rec));
    }
    // Quality ordering: worse training (larger mismatch) must give a larger delta_opt.
    bool ordered = true;
    for (std::size_t i = 0; i < delta_opts.size(); ++i) {
        if (delta_opts[i] < 1.0 - 4.0 * delta_opt_errors[i]) ordered = false;
        if (i > 0 && spec.mismatch_grid[i] > spec.mismatch_grid[i - 1] && !(delta_opts[i] > delta_opts[i - 1])) {
            ordered = false;
        }
    }
    for (auto& rec : summary) rec.metrics["ordering_ok"] = ordered ? 1.0 : 0.0;

    std::vector<ExperimentRecord> records;
    for (auto& [_, rec] : curve) records.push_back(std::move(rec));
    // Summary records use the mismatch ratio as key and live in their own metric namespace.
    for (auto& rec : summary) records.push_back(std::move(rec));
    detail::sort_records(records);
    return records;
}

/// Pairwise Lipschitz estimate of the exact MMSE denoiser on noisy prior samples, per sigma.
inline std::vector<ExperimentRecord> run_lipschitz_table(const ExperimentSpec& spec) {
    detail::require_nonempty(spec.sigma_grid, "sigma grid");
    if (spec.lipschitz_points < 2) throw InvalidParameter("lipschitz: need at least 2 points");
    std::vector<ExperimentRecord> records(spec.sigma_grid.size());
    parallel_for(spec.sigma_grid.size(), spec.workers, [&](std::size_t i) {
        detail::Stopwatch clock;
        const double sigma = spec.sigma_grid[i];
        const auto pairs = sample_pairs(spec.prior, sigma, spec.lipschitz_points, spec.seed + i);
        std::vector<Signal> points;
        points.reserve(pairs.size());
        for (const auto& p : pairs) points.push_back(p.noisy);
        const double lip = estimate_lipschitz(Denoiser::exact_mmse(spec.prior, sigma), points);
        ExperimentRecord rec{to_string(ExperimentKind::Lipschitz), sigma, {}, 0.0};
        rec.metrics["lipschitz_max"] = lip;
        rec.metrics["non_expansive"] = lip <= 1.0 ? 1.0 : 0.0;
        rec.runtime_ms = clock.elapsed_ms();
        records[i] = std::move(rec);
    });
    detail::sort_records(records);
    return records;
}

inline std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::DeltaSweep: return run_delta_sweep_experiment(spec);
        case ExperimentKind::Stability: return run_stability(spec);
        case ExperimentKind::ConvReg: return run_conv_reg(spec);
        case ExperimentKind::Lipschitz: return run_lipschitz_table(spec);
    }
    throw InvalidParameter("unknown experiment");
}

}  // namespace pnplab
