#include <gtest/gtest.h>

#include <cmath>

#include "pnplab/config.hpp"
#include "pnplab/experiments.hpp"
#include "pnplab/output.hpp"

using namespace pnplab;

namespace {

ExperimentSpec small_conv_reg() {
    ExperimentSpec spec = default_spec(ExperimentKind::ConvReg);
    spec.prior = random_gmm_prior({.dim = 16, .components = 3, .mean_scale = 1.0, .variance_min = 0.01,
                                   .variance_max = 0.05, .seed = 2});
    spec.delta_grid = log_spaced(1.0, 100.0, 8);
    return spec;
}

double metric(const std::vector<ExperimentRecord>& recs, double key, const std::string& name) {
    for (const auto& r : recs) {
        if (r.key == key && r.metrics.count(name)) return r.metrics.at(name);
    }
    ADD_FAILURE() << "missing metric " << name << " at key " << key;
    return NAN;
}

}  // namespace

TEST(Experiments, KindNamesRoundTrip) {
    for (auto k : {ExperimentKind::DeltaSweep, ExperimentKind::Stability, ExperimentKind::ConvReg,
                   ExperimentKind::Lipschitz}) {
        EXPECT_EQ(parse_experiment_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_experiment_kind("nope").has_value());
}

TEST(Experiments, LogSpacedEndpoints) {
    const auto g = log_spaced(1.0, 1e3, 32);
    ASSERT_EQ(g.size(), 32u);
    EXPECT_DOUBLE_EQ(g.front(), 1.0);
    EXPECT_DOUBLE_EQ(g.back(), 1e3);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::pow(1e3, 1.0 / 31.0), 1e-12);
}

TEST(Experiments, CsvIdenticalAcrossWorkerCounts) {
    for (auto kind : {ExperimentKind::ConvReg, ExperimentKind::Stability, ExperimentKind::Lipschitz}) {
        ExperimentSpec spec = default_spec(kind);
        if (kind != ExperimentKind::Lipschitz) {
            spec.prior = small_conv_reg().prior;
            spec.delta_grid = log_spaced(1.0, 100.0, 6);
            spec.k_grid = {1, 2, 4};
        }
        spec.lipschitz_points = 40;
        spec.workers = 1;
        const auto one = to_csv(run_experiment(spec), spec.seed);
        spec.workers = 4;
        const auto four = to_csv(run_experiment(spec), spec.seed);
        EXPECT_EQ(one, four) << to_string(kind);
    }
}

TEST(Experiments, DeltaSweepIdenticalAcrossWorkerCounts) {
    ExperimentSpec spec = default_spec(ExperimentKind::DeltaSweep);
    spec.samples = 2000;
    spec.delta_grid = log_spaced(1.0, 10.0, 5);
    spec.workers = 1;
    const auto one = to_csv(run_experiment(spec), spec.seed);
    spec.workers = 3;
    EXPECT_EQ(one, to_csv(run_experiment(spec), spec.seed));
}

TEST(Experiments, DeltaOneWithoutGammaIsPlainPnp) {
    ExperimentSpec spec = small_conv_reg();
    spec.scaling.gamma_rescale = false;
    spec.delta_grid = {1.0};
    const auto recs = run_conv_reg(spec);
    const auto inst = detail::make_solver_instance(spec);
    const Denoiser base = spec.denoiser.build(spec.prior, spec.sigma);
    const Signal y = inst.measurement + spec.sigma * inst.xi;
    const auto plain = pnp_pgd(inst.op, y, base, spec.solver, Signal::Zero(spec.prior.dim()));
    EXPECT_DOUBLE_EQ(metric(recs, 1.0, "data_consistency"),
                     (inst.op.apply(plain.x_star) - inst.measurement).norm() / inst.measurement.norm());
    EXPECT_DOUBLE_EQ(metric(recs, 1.0, "iterations"), static_cast<double>(plain.iterations));
}

TEST(Experiments, ConvRegTrivialIdentityOperator) {
    // Identity operator, identity denoiser: x = gamma (x - tau (x - y)) with tau = 1 gives x = gamma y.
    ExperimentSpec spec = small_conv_reg();
    spec.op.kind = "identity";
    spec.denoiser.kind = "affine";
    spec.denoiser.weight_scale = 1.0;
    spec.denoiser.bias_value = 0.0;
    const auto recs = run_conv_reg(spec);
    const auto inst = detail::make_solver_instance(spec);
    for (double delta : spec.delta_grid) {
        const double gamma = gamma_rescale_factor(delta);
        const Signal y = inst.measurement + (spec.sigma / delta) * inst.xi;
        const double expected = (gamma * y - inst.measurement).norm() / inst.measurement.norm();
        EXPECT_NEAR(metric(recs, delta, "data_consistency"), expected, 1e-12) << delta;
    }
}

TEST(Experiments, ConvRegDataConsistencyDecreases) {
    const auto recs = run_conv_reg(small_conv_reg());
    ASSERT_EQ(recs.size(), 8u);
    for (std::size_t i = 1; i < recs.size(); ++i) {
        EXPECT_LT(recs[i].metrics.at("data_consistency"), recs[i - 1].metrics.at("data_consistency"));
    }
    EXPECT_FALSE(recs.back().metrics.count("iterate_gap"));
}

TEST(Experiments, StabilityIdentityBaseIsAnalytic) {
    // Identity operator and shrinkage base: the fixed point is linear in y, so the
    // distance is exactly gain * (sigma / k) * |xi|.
    ExperimentSpec spec = default_spec(ExperimentKind::Stability);
    spec.prior = GmmPrior::gaussian(Signal::Zero(8), 1.0);
    spec.op.kind = "identity";
    spec.denoiser = {};
    spec.denoiser.kind = "shrinkage";
    spec.denoiser.alpha = 0.5;
    spec.scaling = {ScalingMode::Tweedie, 1.5, false};
    spec.solver.tau = 0.5;
    const auto recs = run_stability(spec);
    const auto inst = detail::make_solver_instance(spec);
    // D_delta(z) = s z with s = 1 - u + u alpha; x = s (x - tau (x - y)) => x = s tau y / (1 - s (1 - tau)).
    const double u = 1.0 / (1.5 * 1.5);
    const double s = 1.0 - u + u * 0.5;
    const double gain = s * 0.5 / (1.0 - s * 0.5);
    for (const auto& r : recs) {
        const double expected = gain * (spec.sigma / r.key) * inst.xi.norm();
        EXPECT_NEAR(r.metrics.at("distance_to_limit"), expected, 1e-9) << r.key;
        EXPECT_DOUBLE_EQ(r.metrics.at("converged"), 1.0);
    }
}

TEST(Experiments, DivergenceIsReportedNotThrown) {
    ExperimentSpec spec = small_conv_reg();
    spec.op.kind = "identity";
    spec.denoiser.kind = "affine";
    spec.denoiser.weight_scale = 1.0;
    spec.denoiser.bias_value = 0.0;
    spec.scaling.gamma_rescale = false;
    spec.solver.tau = 5.0;  // x <- x - 5 (x - y) oscillates and blows up
    spec.solver.max_iters = 500;
    const auto recs = run_conv_reg(spec);
    for (const auto& r : recs) EXPECT_DOUBLE_EQ(r.metrics.at("diverged"), 1.0);
}

TEST(Experiments, LipschitzSingleGaussianValues) {
    ExperimentSpec spec = default_spec(ExperimentKind::Lipschitz);
    spec.prior = GmmPrior::gaussian(Signal::Zero(3), 2.0);
    const auto recs = run_lipschitz_table(spec);
    ASSERT_EQ(recs.size(), spec.sigma_grid.size());
    for (const auto& r : recs) {
        EXPECT_NEAR(r.metrics.at("lipschitz_max"), 2.0 / (2.0 + r.key * r.key), 1e-9);
        EXPECT_DOUBLE_EQ(r.metrics.at("non_expansive"), 1.0);
    }
}

TEST(Experiments, DeltaSweepCurveIsConvexInInverseDeltaSquared) {
    ExperimentSpec spec = default_spec(ExperimentKind::DeltaSweep);
    spec.samples = 5000;
    spec.mismatch_grid = {2.0};
    spec.delta_grid = log_spaced(1.0, 30.0, 12);
    const auto recs = run_experiment(spec);
    std::vector<std::pair<double, double>> curve;  // (u, l2)
    for (const auto& r : recs) {
        if (r.metrics.count("l2_mismatch_2")) curve.emplace_back(1.0 / (r.key * r.key), r.metrics.at("l2_mismatch_2"));
    }
    ASSERT_EQ(curve.size(), 12u);
    std::sort(curve.begin(), curve.end());
    for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
        const auto [u0, l0] = curve[i - 1];
        const auto [u1, l1] = curve[i];
        const auto [u2, l2] = curve[i + 1];
        const double chord = l0 + (l2 - l0) * (u1 - u0) / (u2 - u0);
        EXPECT_LE(l1, chord + 1e-12);
    }
}

TEST(Experiments, UnsortedGridIsSorted) {
    ExperimentSpec spec = small_conv_reg();
    spec.delta_grid = {10.0, 1.0, 3.0};
    const auto recs = run_conv_reg(spec);
    EXPECT_DOUBLE_EQ(recs[0].key, 1.0);
    EXPECT_DOUBLE_EQ(recs[2].key, 10.0);
}

TEST(Experiments, EmptyGridRejected) {
    ExperimentSpec spec = small_conv_reg();
    spec.delta_grid.clear();
    EXPECT_THROW(run_conv_reg(spec), InvalidParameter);
}

TEST(Output, CsvFormat) {
    std::vector<ExperimentRecord> recs{{"conv-reg", 1.5, {{"a", 0.1}, {"b", 2.0}}, 12.0}};
    EXPECT_EQ(to_csv(recs, 7),
              "experiment,key,metric,value,runtime_ms,seed\n"
              "conv-reg,1.5,a,0.1,0,7\n"
              "conv-reg,1.5,b,2,0,7\n");
    EXPECT_EQ(to_csv(recs, 7, {true}).find("conv-reg,1.5,a,0.1,12,7"), 44u);
}

TEST(Output, SvgHasOnePolylinePerSeries) {
    std::vector<ExperimentRecord> recs;
    for (double d : {1.0, 10.0, 100.0}) recs.push_back({"conv-reg", d, {{"data_consistency", 1.0 / d}}, 0});
    const auto svg = render_svg(metric_series(recs, "data_consistency"), "t", "delta", "dc");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("<polyline"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
