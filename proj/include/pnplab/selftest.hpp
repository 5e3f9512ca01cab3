#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "pnplab/linop.hpp"
#include "pnplab/output.hpp"
#include "pnplab/prior.hpp"
#include "pnplab/solver.hpp"
#include "pnplab/synthetic.hpp"

namespace pnplab {

/// Replaceable pieces of the self-test; the mutation tests swap the score.
struct SelftestHooks {
    std::function<Signal(const GmmPrior&, double, const Signal&)> score = [](const GmmPrior& p, double sigma,
                                                                             const Signal& y) {
        return p.score(sigma, y);
    };
};

struct SelftestCheck {
    std::string name;
    bool pass;
    double worst;
    double tolerance;
};

inline std::vector<SelftestCheck> run_selftest_checks(const SelftestHooks& hooks = {}) {
    std::vector<SelftestCheck> checks;

    {  // Tweedie route y + sigma^2 score against the posterior-mean closed form.
        double worst = 0.0;
        for (Eigen::Index n : {1, 4, 16}) {
            const auto prior = random_gmm_prior({.dim = n, .components = 3, .mean_scale = 1.0, .variance_min = 0.05,
                                                 .variance_max = 0.5, .seed = static_cast<std::uint64_t>(n)});
            for (double sigma : {0.05, 0.3}) {
                for (std::uint64_t i = 0; i < 200; ++i) {
                    const auto pair = sample_pair_at(prior, sigma, 1000 + n, i);
                    const Signal tweedie = pair.noisy + sigma * sigma * hooks.score(prior, sigma, pair.noisy);
                    const Signal oracle = prior.posterior_mean_oracle(sigma, pair.noisy);
                    worst = std::max(worst, (tweedie - oracle).norm() / (1.0 + pair.noisy.norm()));
                }
            }
        }
        checks.push_back({"tweedie-consistency", worst <= 1e-10, worst, 1e-10});
    }

    {  // Affine fixed-point oracle against the iteration.
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 10; ++s) {
            const Eigen::Index n = 4 + static_cast<Eigen::Index>(s % 5);
            const auto op = ForwardOperator::dense(random_matrix(n, n, 500 + s));
            const auto base = random_affine_denoiser(n, 0.9, 600 + s, true);
            SplitMix64 rng(700 + s);
            const Signal y = standard_normal(n, rng);
            const auto sd = tweedie_scale(base, std::sqrt(2.0));
            PnpConfig cfg;
            cfg.max_iters = 100000;
            cfg.tol = 1e-14;
            cfg.record_history = false;
            const auto res = pnp_pgd(op, y, sd, cfg, Signal::Zero(n));
            const Signal oracle = linear_fixed_point_oracle(op, y, sd, cfg);
            worst = std::max(worst, (res.x_star - oracle).norm() / std::max(1e-300, oracle.norm()));
        }
        checks.push_back({"affine-fixed-point-oracle", worst <= 1e-8, worst, 1e-8});
    }

    {  // compose_averaged(1/delta^2, 1/2) == delta^2 / (2 delta^2 - 1).
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double d2 = 1.0 + 0.01 * std::pow(1.2, i);
            worst = std::max(worst, std::abs(compose_averaged(1.0 / d2, 0.5) - averagedness_theta(std::sqrt(d2))));
        }
        checks.push_back({"averagedness-identity", worst <= 1e-14, worst, 1e-14});
    }

    {  // <Ax, y> == <x, A^T y>.
        double worst = 0.0;
        const std::vector<ForwardOperator> ops{
            ForwardOperator::identity(9), ForwardOperator::random_mask(9, 0.3, 1),
            ForwardOperator::conv1d(9, make_signal({0.5, -1.0, 0.25})), ForwardOperator::dense(random_matrix(5, 9, 2))};
        for (const auto& op : ops) {
            for (std::uint64_t i = 0; i < 100; ++i) {
                auto rng = stream_for(31, i);
                const Signal x = standard_normal(op.in_dim(), rng);
                const Signal y = standard_normal(op.out_dim(), rng);
                const double lhs = op.apply(x).dot(y);
                worst = std::max(worst, std::abs(lhs - x.dot(op.adjoint(y))) / (1.0 + std::abs(lhs)));
            }
        }
        checks.push_back({"adjoint-consistency", worst <= 1e-10, worst, 1e-10});
    }
    return checks;
}

/// Prints one line per check; returns 0 when all pass, 3 otherwise.
inline int run_selftest(std::ostream& out, const SelftestHooks& hooks = {}) {
    int status = 0;
    for (const auto& c : run_selftest_checks(hooks)) {
        out << (c.pass ? "pass " : "FAIL ") << c.name << " worst=" << format_double(c.worst)
            << " tol=" << format_double(c.tolerance) << '\n';
        if (!c.pass) {
            status = 3;
            out << "failed invariant: " << c.name << '\n';
        }
    }
    return status;
}

}  // namespace pnplab
